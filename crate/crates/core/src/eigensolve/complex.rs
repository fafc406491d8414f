//! Zero counting by the argument principle and quadtree isolation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EigenvalueRecord, Rect, SearchOptions, ShootingFunction};
use crate::error::Result;

/// Samples with `|f|` below this make a winding number untrustworthy.
const TINY: f64 = 1e-12;
const MAX_PHASE_STEP: f64 = PI / 3.0;
const MAX_EDGE_SPLITS: usize = 30;
const START_PER_EDGE: usize = 16;
const MAX_PER_EDGE: usize = 1024;
/// Off-centre split fractions keep the real axis and other symmetry lines
/// away from cell edges.
const SPLIT_RE: f64 = 0.537;
const SPLIT_IM: f64 = 0.471;
const NEWTON_MAX: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Winding {
    Count(i64),
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedCell {
    pub rect: Rect,
    pub winding: Option<i64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexSearchResult {
    pub records: Vec<EigenvalueRecord>,
    pub unresolved: Vec<UnresolvedCell>,
    /// Parent cells whose winding differs from the sum over their children.
    pub additivity_violations: usize,
    pub cells: usize,
}

impl ComplexSearchResult {
    fn absorb(&mut self, other: ComplexSearchResult) {
        self.records.extend(other.records);
        self.unresolved.extend(other.unresolved);
        self.additivity_violations += other.additivity_violations;
        self.cells += other.cells;
    }
}

/// Counter-clockwise boundary samples, `per_edge` on each side.
fn boundary(rect: &Rect, per_edge: usize) -> Vec<Complex64> {
    let corners = [
        Complex64::new(rect.re_lo, rect.im_lo),
        Complex64::new(rect.re_hi, rect.im_lo),
        Complex64::new(rect.re_hi, rect.im_hi),
        Complex64::new(rect.re_lo, rect.im_hi),
    ];
    let mut pts = Vec::with_capacity(4 * per_edge);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..per_edge {
            pts.push(a + (b - a) * (i as f64 / per_edge as f64));
        }
    }
    pts
}

fn phase_step(f1: Complex64, f2: Complex64) -> f64 {
    (f2 * f1.conj()).arg()
}

/// Phase change along the segment, bisecting where it jumps.
fn segment_phase(
    f: &ShootingFunction,
    z1: Complex64,
    z2: Complex64,
    f1: Complex64,
    f2: Complex64,
    depth: usize,
) -> Result<Option<f64>> {
    let d = phase_step(f1, f2);
    if d.abs() <= MAX_PHASE_STEP || depth >= MAX_EDGE_SPLITS {
        return Ok(Some(d));
    }
    let zm = (z1 + z2) / 2.0;
    let fm = f.eval(zm)?;
    if fm.norm() < TINY {
        return Ok(None);
    }
    let a = segment_phase(f, z1, zm, f1, fm, depth + 1)?;
    let b = segment_phase(f, zm, z2, fm, f2, depth + 1)?;
    Ok(a.zip(b).map(|(a, b)| a + b))
}

fn winding_at(f: &ShootingFunction, rect: &Rect, per_edge: usize) -> Result<Option<f64>> {
    let pts = boundary(rect, per_edge);
    let vals: Vec<Complex64> = pts.par_iter().map(|z| f.eval(*z)).collect::<Result<_>>()?;
    if vals.iter().any(|v| v.norm() < TINY) {
        return Ok(None);
    }
    let m = pts.len();
    let phases: Vec<Option<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let j = (k + 1) % m;
            segment_phase(f, pts[k], pts[j], vals[k], vals[j], 0)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for p in phases {
        match p {
            Some(p) => total += p,
            None => return Ok(None),
        }
    }
    Ok(Some(total / (2.0 * PI)))
}

/// Number of zeros inside `rect`, doubling the sampling until two
/// consecutive refinements agree.
pub(crate) fn winding_number(f: &ShootingFunction, rect: &Rect) -> Result<Winding> {
    let mut prev: Option<i64> = None;
    let mut per_edge = START_PER_EDGE;
    while per_edge <= MAX_PER_EDGE {
        let w = match winding_at(f, rect, per_edge)? {
            Some(w) => w,
            None => return Ok(Winding::Unstable),
        };
        let rounded = w.round();
        let count = ((w - rounded).abs() < 0.2).then_some(rounded as i64);
        if let (Some(a), Some(b)) = (prev, count) {
            if a == b {
                return Ok(Winding::Count(a));
            }
        }
        prev = count;
        per_edge *= 2;
    }
    Ok(Winding::Unstable)
}

fn split(rect: &Rect) -> Vec<Rect> {
    let w = rect.re_hi - rect.re_lo;
    let h = rect.im_hi - rect.im_lo;
    let xm = rect.re_lo + SPLIT_RE * w;
    let ym = rect.im_lo + SPLIT_IM * h;
    let halves_re = || {
        vec![
            Rect { re_hi: xm, ..*rect },
            Rect { re_lo: xm, ..*rect },
        ]
    };
    let halves_im = || {
        vec![
            Rect { im_hi: ym, ..*rect },
            Rect { im_lo: ym, ..*rect },
        ]
    };
    if w > 4.0 * h {
        halves_re()
    } else if h > 4.0 * w {
        halves_im()
    } else {
        halves_re().iter().flat_map(|r| vec![Rect { im_hi: ym, ..*r }, Rect { im_lo: ym, ..*r }]).collect()
    }
}

/// Newton iteration with a central-difference derivative.
pub(crate) fn newton(f: &ShootingFunction, start: Complex64, step: f64) -> Result<Option<(Complex64, usize)>> {
    let mut z = start;
    for it in 1..=NEWTON_MAX {
        let fz = f.eval(z)?;
        if fz.norm() == 0.0 {
            return Ok(Some((z, it)));
        }
        let h = step * z.norm().max(1.0);
        let hr = Complex64::new(h, 0.0);
        let d = (f.eval(z + hr)? - f.eval(z - hr)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            return Ok(None);
        }
        let dz = fz / d;
        z -= dz;
        if !z.is_finite() || !f.admissible(z) {
            return Ok(None);
        }
        if dz.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            return Ok(Some((z, it)));
        }
    }
    Ok(None)
}

fn resolve(f: &ShootingFunction, rect: Rect, winding: Winding, depth: usize, opts: &SearchOptions) -> Result<ComplexSearchResult> {
    let mut out = ComplexSearchResult {
        cells: 1,
        ..Default::default()
    };
    match winding {
        Winding::Count(0) => return Ok(out),
        Winding::Count(1) => {
            if let Some((z, iterations)) = newton(f, rect.center(), opts.newton_step)? {
                if rect.expanded(1e-9 * rect.diameter()).contains(z) {
                    let residual = f.eval(z)?.norm();
                    if residual < opts.residual_tol {
                        out.records.push(EigenvalueRecord::new(z, f.chain(), f.side(), residual, iterations));
                        return Ok(out);
                    }
                }
            }
        }
        _ => {}
    }
    if depth == 0 {
        out.unresolved.push(UnresolvedCell {
            rect,
            winding: match winding {
                Winding::Count(w) => Some(w),
                Winding::Unstable => None,
            },
            reason: match winding {
                Winding::Unstable => "winding number could not be stabilized".into(),
                Winding::Count(w) if w < 0 => "negative winding number".into(),
                _ => "subdivision depth exhausted".into(),
            },
        });
        return Ok(out);
    }
    let children = split(&rect);
    let windings: Vec<Winding> = children
        .par_iter()
        .map(|c| winding_number(f, c))
        .collect::<Result<_>>()?;
    if let Winding::Count(w) = winding {
        let sum: Option<i64> = windings
            .iter()
            .map(|c| match c {
                Winding::Count(k) => Some(*k),
                Winding::Unstable => None,
            })
            .sum();
        if sum.is_some_and(|s| s != w) {
            out.additivity_violations += 1;
        }
    }
    let parts: Vec<ComplexSearchResult> = children
        .into_par_iter()
        .zip(windings)
        .map(|(c, w)| resolve(f, c, w, depth - 1, opts))
        .collect::<Result<_>>()?;
    for p in parts {
        out.absorb(p);
    }
    Ok(out)
}

/// Isolates and refines every zero of `f` in `rect`.
pub(crate) fn search_rect(f: &ShootingFunction, rect: Rect, depth: usize, opts: &SearchOptions) -> Result<ComplexSearchResult> {
    let w = winding_number(f, &rect)?;
    let mut out = resolve(f, rect, w, depth, opts)?;
    out.records = super::dedup(out.records, opts.dedup_tol);
    Ok(out)
}
