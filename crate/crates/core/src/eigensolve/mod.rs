//! Discrete eigenvalues of `T` as zeros of the chains' boundary functions.
//!
//! For each chain the boundary value `f(λ)` of the solution that decays like
//! `alpha1(λ)^n` is analytic off the chain's interval and vanishes exactly at
//! the chain's eigenvalues. Real zeros are bracketed and bisected; complex
//! zeros are counted with the argument principle and isolated by a quadtree.
//! The same search on the transposed model (bands `b` and `c` swapped) must
//! give the same set.

mod complex;

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientModel;
use crate::conditions::{exponential_rate_check, RateStatus, RateVerdict};
use crate::error::{Error, Result};
use crate::operators::{operator_norm_bound, truncate, BandOperator};
use crate::oracle::chain_spectra;
use crate::recurrence::{chain_interval, jost_boundary, Chain, ChainCoefficients, JostControls};
use crate::spectra::{essential_spectrum, Interval, SpectralPoint, SpectralSet};

pub use complex::{ComplexSearchResult, UnresolvedCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Direct,
    Adjoint,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Direct => "direct",
            Side::Adjoint => "adjoint",
        })
    }
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self> {
        let ok = [re_lo, re_hi, im_lo, im_hi].iter().all(|v| v.is_finite()) && re_lo < re_hi && im_lo < im_hi;
        if !ok {
            return Err(Error::domain(format!(
                "malformed rectangle [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]"
            )));
        }
        Ok(Rect {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new((self.re_lo + self.re_hi) / 2.0, (self.im_lo + self.im_hi) / 2.0)
    }

    pub fn diameter(&self) -> f64 {
        (self.re_hi - self.re_lo).hypot(self.im_hi - self.im_lo)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    pub fn expanded(&self, d: f64) -> Rect {
        Rect {
            re_lo: self.re_lo - d,
            re_hi: self.re_hi + d,
            im_lo: self.im_lo - d,
            im_hi: self.im_hi + d,
        }
    }

    /// Distance from the rectangle to a real interval.
    pub fn distance_to(&self, iv: &Interval) -> f64 {
        let dx = (iv.lo - self.re_hi).max(self.re_lo - iv.hi).max(0.0);
        let dy = if self.im_lo <= 0.0 && self.im_hi >= 0.0 {
            0.0
        } else {
            self.im_lo.abs().min(self.im_hi.abs())
        };
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Half-width of the excluded neighbourhood of the essential spectrum.
    pub collar: f64,
    /// Real-axis samples per gap segment.
    pub grid: usize,
    /// Quadtree depth.
    pub depth: usize,
    /// Relative step of the central-difference derivative.
    pub newton_step: f64,
    pub residual_tol: f64,
    /// Records closer than this are merged.
    pub dedup_tol: f64,
    /// Direct and adjoint sets must agree to this distance.
    pub match_tol: f64,
    /// Records closer than this to the essential spectrum carry a warning.
    pub boundary_warning: f64,
    pub isolation_step: f64,
    /// Size of each chain block of the section used for multiplicities.
    pub multiplicity_block: usize,
    pub cluster_radius: f64,
    /// Run even when the exponential-rate hypothesis is not established.
    pub acknowledge_hypothesis: bool,
    pub jost: JostControls,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            collar: 1e-6,
            grid: 400,
            depth: 12,
            newton_step: 1e-6,
            residual_tol: 1e-8,
            dedup_tol: 1e-9,
            match_tol: 1e-6,
            boundary_warning: 1e-3,
            isolation_step: 1e-4,
            multiplicity_block: 256,
            cluster_radius: 1e-4,
            acknowledge_hypothesis: false,
            jost: JostControls::default(),
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<()> {
        let positive = [
            self.collar,
            self.newton_step,
            self.residual_tol,
            self.dedup_tol,
            self.match_tol,
            self.boundary_warning,
            self.isolation_step,
            self.cluster_radius,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("search tolerances must be positive"));
        }
        if self.grid < 2 {
            return Err(Error::domain("grid needs at least 2 points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub re: f64,
    pub im: f64,
    pub chain: Chain,
    pub side: Side,
    pub residual: f64,
    pub iterations: usize,
    pub multiplicity: usize,
    pub matched_by_adjoint: bool,
    pub near_boundary: bool,
    /// `|f(λ ± step)| > 10 |f(λ)|` on every admissible side.
    pub isolated: Option<bool>,
}

impl EigenvalueRecord {
    pub(crate) fn new(z: Complex64, chain: Chain, side: Side, residual: f64, iterations: usize) -> Self {
        EigenvalueRecord {
            re: z.re,
            im: z.im,
            chain,
            side,
            residual,
            iterations,
            multiplicity: 1,
            matched_by_adjoint: false,
            near_boundary: false,
            isolated: None,
        }
    }

    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

pub fn write_records_csv<W: Write>(mut w: W, records: &[EigenvalueRecord]) -> io::Result<()> {
    writeln!(w, "re,im,chain,side,residual,multiplicity,adjoint_matched")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{:e},{},{}",
            r.re, r.im, r.chain, r.side, r.residual, r.multiplicity, r.matched_by_adjoint
        )?;
    }
    Ok(())
}

fn sort_records(v: &mut [EigenvalueRecord]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Sorts and merges records closer than `tol`, keeping the smaller residual.
pub(crate) fn dedup(mut v: Vec<EigenvalueRecord>, tol: f64) -> Vec<EigenvalueRecord> {
    sort_records(&mut v);
    let mut out: Vec<EigenvalueRecord> = Vec::with_capacity(v.len());
    for r in v {
        match out
            .iter_mut()
            .find(|o| o.chain == r.chain && o.side == r.side && (o.lambda() - r.lambda()).norm() <= tol)
        {
            Some(o) if r.residual < o.residual => *o = r,
            Some(_) => {}
            None => out.push(r),
        }
    }
    out
}

/// Boundary function of one chain on one side, restricted to the complement
/// of the collar around the essential spectrum.
#[derive(Debug, Clone)]
pub struct ShootingFunction {
    model: CoefficientModel,
    chain: Chain,
    side: Side,
    essential: SpectralSet,
    collar: f64,
    controls: JostControls,
}

impl ShootingFunction {
    pub fn new(model: &CoefficientModel, chain: Chain, side: Side, opts: &SearchOptions) -> Result<Self> {
        let profile = model.validate()?;
        let model = match side {
            Side::Direct => model.clone(),
            Side::Adjoint => model.transposed(),
        };
        Ok(ShootingFunction {
            model,
            chain,
            side,
            essential: essential_spectrum(&profile)?,
            collar: opts.collar,
            controls: opts.jost,
        })
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn admissible(&self, z: Complex64) -> bool {
        z.is_finite() && self.essential.interval_distance(z) > self.collar
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !self.admissible(z) {
            return Err(Error::SpectralRegion(format!(
                "λ = {z} is within {} of the essential spectrum",
                self.collar
            )));
        }
        self.eval_unchecked(z)
    }

    /// Evaluation away from this chain's own interval only; used to look for
    /// eigenvalues of one chain embedded in the other chain's interval.
    fn eval_unchecked(&self, z: Complex64) -> Result<Complex64> {
        let co = ChainCoefficients::new(&self.model, self.chain)?;
        let j = jost_boundary(&co, z, &self.controls)?;
        if !j.converged {
            return Err(Error::Instability(format!(
                "boundary value at λ = {z} did not settle by start index {}",
                j.start_index
            )));
        }
        Ok(j.f0)
    }

    fn certify(&self, rec: &mut EigenvalueRecord, opts: &SearchOptions) -> Result<()> {
        let z = rec.lambda();
        rec.near_boundary = self.essential.interval_distance(z) < opts.boundary_warning;
        let f0 = self.eval_unchecked(z)?.norm();
        let mut sides = Vec::new();
        for s in [-1.0, 1.0] {
            let w = z + s * opts.isolation_step;
            if self.admissible(w) {
                sides.push(self.eval(w)?.norm() > 10.0 * f0);
            }
        }
        rec.isolated = (!sides.is_empty()).then(|| sides.iter().all(|b| *b));
        Ok(())
    }
}

/// Boundary residual of `chain` at `λ`: zero exactly at eigenvalues.
pub fn shoot(model: &CoefficientModel, chain: Chain, side: Side, lambda: Complex64) -> Result<Complex64> {
    ShootingFunction::new(model, chain, side, &SearchOptions::default())?.eval(lambda)
}

fn real_zeros(
    f: &ShootingFunction,
    lo: f64,
    hi: f64,
    grid: usize,
    eval: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<Vec<EigenvalueRecord>> {
    let xs: Vec<f64> = (0..grid)
        .map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.par_iter().map(|x| eval(*x)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 0..grid {
        if ys[k] == 0.0 {
            out.push(EigenvalueRecord::new(Complex64::new(xs[k], 0.0), f.chain, f.side, 0.0, 0));
            continue;
        }
        if k + 1 == grid || ys[k + 1] == 0.0 || (ys[k] > 0.0) == (ys[k + 1] > 0.0) {
            continue;
        }
        let (mut a, mut b, mut fa) = (xs[k], xs[k + 1], ys[k]);
        let mut iterations = 0;
        while iterations < 200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            iterations += 1;
            let fm = eval(m)?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let (ra, rb) = (eval(a)?.abs(), eval(b)?.abs());
        let (x, residual) = if ra <= rb { (a, ra) } else { (b, rb) };
        out.push(EigenvalueRecord::new(Complex64::new(x, 0.0), f.chain, f.side, residual, iterations));
    }
    Ok(out)
}

fn check_residuals(records: &[EigenvalueRecord], tol: f64) -> Result<()> {
    if let Some(r) = records.iter().find(|r| r.residual >= tol) {
        return Err(Error::Instability(format!(
            "sign change at λ = {} without a zero (residual {:e})",
            r.re, r.residual
        )));
    }
    Ok(())
}

/// Real eigenvalues of one chain in `[lo, hi]`, which must stay clear of the
/// collar around the essential spectrum.
pub fn find_real_eigenvalues(
    model: &CoefficientModel,
    chain: Chain,
    side: Side,
    lo: f64,
    hi: f64,
    grid: usize,
    opts: &SearchOptions,
) -> Result<Vec<EigenvalueRecord>> {
    opts.validate()?;
    if !(lo < hi) || grid < 2 {
        return Err(Error::domain("need lo < hi and grid >= 2"));
    }
    let f = ShootingFunction::new(model, chain, side, opts)?;
    for iv in f.essential.intervals() {
        if lo <= iv.hi + opts.collar && hi >= iv.lo - opts.collar {
            return Err(Error::domain(format!(
                "[{lo}, {hi}] meets the essential interval [{}, {}] or its collar",
                iv.lo, iv.hi
            )));
        }
    }
    let eval = |x: f64| f.eval(Complex64::new(x, 0.0)).map(|v| v.re);
    let mut recs = real_zeros(&f, lo, hi, grid, &eval)?;
    check_residuals(&recs, opts.residual_tol)?;
    for r in recs.iter_mut() {
        f.certify(r, opts)?;
    }
    Ok(dedup(recs, opts.dedup_tol))
}

/// Complex eigenvalues of one chain inside `rect`.
pub fn find_complex_eigenvalues(
    model: &CoefficientModel,
    chain: Chain,
    side: Side,
    rect: Rect,
    depth: usize,
    opts: &SearchOptions,
) -> Result<ComplexSearchResult> {
    opts.validate()?;
    let f = ShootingFunction::new(model, chain, side, opts)?;
    for iv in f.essential.intervals() {
        if rect.distance_to(iv) <= opts.collar {
            return Err(Error::domain(format!(
                "rectangle meets the essential interval [{}, {}] or its collar",
                iv.lo, iv.hi
            )));
        }
    }
    let mut out = complex::search_rect(&f, rect, depth, opts)?;
    for r in out.records.iter_mut() {
        f.certify(r, opts)?;
    }
    Ok(out)
}

/// Winding number of one chain's boundary function around `rect`.
pub fn count_zeros(model: &CoefficientModel, chain: Chain, side: Side, rect: Rect, opts: &SearchOptions) -> Result<Option<i64>> {
    let f = ShootingFunction::new(model, chain, side, opts)?;
    for iv in f.essential.intervals() {
        if rect.distance_to(iv) <= opts.collar {
            return Err(Error::domain("rectangle meets the essential spectrum collar"));
        }
    }
    Ok(match complex::winding_number(&f, &rect)? {
        complex::Winding::Count(w) => Some(w),
        complex::Winding::Unstable => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub region: Rect,
    /// Direct-side eigenvalues as isolated points.
    pub set: SpectralSet,
    pub direct: Vec<EigenvalueRecord>,
    pub adjoint: Vec<EigenvalueRecord>,
    /// Real eigenvalues of one chain lying inside the other chain's interval.
    pub embedded: Vec<EigenvalueRecord>,
    pub unresolved: Vec<UnresolvedCell>,
    pub additivity_violations: usize,
    pub rate: RateVerdict,
    /// Set when the search ran without the exponential-rate hypothesis.
    pub heuristic: bool,
}

/// Real segments of `[lo, hi]` outside the `pad`-fattened intervals.
fn gaps(lo: f64, hi: f64, intervals: &[Interval], pad: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cur = lo;
    for iv in intervals {
        let (a, b) = (iv.lo - pad, iv.hi + pad);
        if b < cur {
            continue;
        }
        if a > cur {
            out.push((cur, a.min(hi)));
        }
        cur = cur.max(b);
        if cur >= hi {
            break;
        }
    }
    if cur < hi {
        out.push((cur, hi));
    }
    out.retain(|(a, b)| b > a);
    out
}

struct ChainSearch {
    records: Vec<EigenvalueRecord>,
    unresolved: Vec<UnresolvedCell>,
    violations: usize,
}

fn search_chain(f: &ShootingFunction, region: &Rect, opts: &SearchOptions) -> Result<ChainSearch> {
    let h = 2.0 * opts.collar;
    let mut records = Vec::new();
    let mut unresolved = Vec::new();
    let mut violations = 0;
    let mut absorb = |res: ComplexSearchResult, records: &mut Vec<EigenvalueRecord>| {
        records.extend(res.records);
        unresolved.extend(res.unresolved);
        violations += res.additivity_violations;
    };

    if region.im_lo < 0.0 && region.im_hi > 0.0 {
        let eval = |x: f64| f.eval(Complex64::new(x, 0.0)).map(|v| v.re);
        for (a, b) in gaps(region.re_lo, region.re_hi, f.essential.intervals(), h) {
            let real = real_zeros(f, a, b, opts.grid, &eval)?;
            check_residuals(&real, opts.residual_tol)?;
            let strip = Rect::new(a, b, (-h).max(region.im_lo), h.min(region.im_hi))?;
            let counted = complex::winding_number(f, &strip)?;
            let consistent = matches!(counted, complex::Winding::Count(w) if w == real.len() as i64);
            records.extend(real);
            if !consistent {
                absorb(complex::search_rect(f, strip, opts.depth, opts)?, &mut records);
            }
        }
    }
    if region.im_hi > h {
        let upper = Rect::new(region.re_lo, region.re_hi, region.im_lo.max(h), region.im_hi)?;
        absorb(complex::search_rect(f, upper, opts.depth, opts)?, &mut records);
    }
    if region.im_lo < -h {
        let lower = Rect::new(region.re_lo, region.re_hi, region.im_lo, region.im_hi.min(-h))?;
        absorb(complex::search_rect(f, lower, opts.depth, opts)?, &mut records);
    }
    let mut records = dedup(records, opts.dedup_tol);
    for r in records.iter_mut() {
        f.certify(r, opts)?;
    }
    Ok(ChainSearch {
        records,
        unresolved,
        violations,
    })
}

/// Real zeros of `f` inside the other chain's interval but away from its own.
fn embedded_zeros(f: &ShootingFunction, own: Interval, opts: &SearchOptions) -> Result<Vec<EigenvalueRecord>> {
    let h = 2.0 * opts.collar;
    let mut out = Vec::new();
    for iv in f.essential.intervals() {
        for (a, b) in gaps(iv.lo, iv.hi, &[own], h) {
            let eval = |x: f64| f.eval_unchecked(Complex64::new(x, 0.0)).map(|v| v.re);
            let mut found = real_zeros(f, a, b, opts.grid, &eval)?;
            found.retain(|r| r.residual < opts.residual_tol);
            out.extend(found);
        }
    }
    Ok(out)
}

fn default_region(model: &CoefficientModel) -> Result<Rect> {
    let b = operator_norm_bound(model)?;
    let r = b + 0.1 * (1.0 + b);
    Rect::new(-r, r, -r, r)
}

/// Greedy one-to-one matching; returns the matched flags of both lists.
fn match_sets(a: &[Complex64], b: &[Complex64], tol: f64) -> (Vec<bool>, Vec<bool>) {
    let mut ma = vec![false; a.len()];
    let mut mb = vec![false; b.len()];
    for (i, z) in a.iter().enumerate() {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !mb[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((j, d)) = best {
            if d <= tol {
                ma[i] = true;
                mb[j] = true;
            }
        }
    }
    (ma, mb)
}

/// Discrete spectrum of `T` in `region` (default: a square containing the
/// numerical range bound), cross-checked against the transposed operator.
pub fn discrete_spectrum(model: &CoefficientModel, region: Option<Rect>, opts: &SearchOptions) -> Result<DiscreteSpectrum> {
    opts.validate()?;
    let profile = model.validate()?;
    let rate = exponential_rate_check(model);
    if rate.status != RateStatus::Holds && !opts.acknowledge_hypothesis {
        return Err(Error::HypothesisUnmet(format!(
            "exponential-rate check is {:?}; pass the acknowledgment flag to search anyway",
            rate.status
        )
        .to_lowercase()));
    }
    let region = match region {
        Some(r) => r,
        None => default_region(model)?,
    };
    let h = 2.0 * opts.collar;
    if region.im_lo.abs() <= h || region.im_hi.abs() <= h {
        return Err(Error::domain("search region edges must stay clear of the real axis"));
    }

    let mut direct = Vec::new();
    let mut adjoint = Vec::new();
    let mut embedded = Vec::new();
    let mut unresolved = Vec::new();
    let mut violations = 0;
    for side in [Side::Direct, Side::Adjoint] {
        for chain in Chain::ALL {
            let f = ShootingFunction::new(model, chain, side, opts)?;
            let found = search_chain(&f, &region, opts)?;
            unresolved.extend(found.unresolved);
            violations += found.violations;
            match side {
                Side::Direct => {
                    direct.extend(found.records);
                    embedded.extend(embedded_zeros(&f, chain_interval(&profile, chain), opts)?);
                }
                Side::Adjoint => adjoint.extend(found.records),
            }
        }
    }
    sort_records(&mut direct);
    sort_records(&mut adjoint);

    let zs: Vec<Complex64> = direct.iter().map(|r| r.lambda()).collect();
    let ws: Vec<Complex64> = adjoint.iter().map(|r| r.lambda()).collect();
    let (md, ma) = match_sets(&zs, &ws, opts.match_tol);
    if md.iter().any(|m| !m) || ma.iter().any(|m| !m) {
        return Err(Error::AdjointMismatch {
            direct: zs,
            adjoint: ws,
        });
    }
    for (r, m) in direct.iter_mut().zip(&md) {
        r.matched_by_adjoint = *m;
    }
    for (r, m) in adjoint.iter_mut().zip(&ma) {
        r.matched_by_adjoint = *m;
    }

    if !direct.is_empty() {
        let n = 2 * opts.multiplicity_block;
        let section = truncate(&BandOperator::full(model)?, n)?;
        let (odd, even) = chain_spectra(&section)?;
        for r in direct.iter_mut().chain(adjoint.iter_mut()) {
            let block = match r.chain {
                Chain::Odd => &odd,
                Chain::Even => &even,
            };
            let count = block
                .iter()
                .filter(|z| (*z - r.lambda()).norm() <= opts.cluster_radius)
                .count();
            r.multiplicity = count.max(1);
        }
    }

    let points = direct
        .iter()
        .map(|r| SpectralPoint {
            re: r.re,
            im: r.im,
            source: Some(r.chain),
            residual: Some(r.residual),
        })
        .collect();
    Ok(DiscreteSpectrum {
        region,
        set: SpectralSet::from_points(points),
        direct,
        adjoint,
        embedded,
        unresolved,
        additivity_violations: violations,
        rate,
        heuristic: !matches!(exponential_rate_check(model).status, RateStatus::Holds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Band, LimitProfile};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free() -> LimitProfile {
        LimitProfile::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn single_site() -> CoefficientModel {
        CoefficientModel::constant(free()).with_override(Band::A, 1, 3.0)
    }

    #[test]
    fn free_shoot_is_nonzero() {
        let m = CoefficientModel::constant(free());
        for lam in [c(2.5, 0.0), c(-3.0, 0.0), c(0.0, 1.0), c(1.0, -0.2)] {
            for side in [Side::Direct, Side::Adjoint] {
                assert!(shoot(&m, Chain::Odd, side, lam).unwrap().norm() > 0.5);
            }
        }
        assert!(matches!(shoot(&m, Chain::Odd, Side::Direct, c(1.0, 0.0)), Err(Error::SpectralRegion(_))));
    }

    #[test]
    fn single_site_real_search() {
        let opts = SearchOptions::default();
        let m = single_site();
        let r = find_real_eigenvalues(&m, Chain::Odd, Side::Direct, 2.1, 10.0, 200, &opts).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 10.0 / 3.0).abs() < 1e-10);
        assert!(r[0].residual < 1e-8);
        assert_eq!(r[0].isolated, Some(true));
        let r = find_real_eigenvalues(&m, Chain::Even, Side::Direct, 2.1, 10.0, 200, &opts).unwrap();
        assert!(r.is_empty());
        let r = find_real_eigenvalues(&CoefficientModel::constant(free()), Chain::Odd, Side::Direct, 2.1, 10.0, 200, &opts).unwrap();
        assert!(r.is_empty());
        assert!(find_real_eigenvalues(&m, Chain::Odd, Side::Direct, 1.0, 3.0, 50, &opts).is_err());
    }

    #[test]
    fn symmetric_sides_agree() {
        let m = CoefficientModel::exponential(free(), [0.4, 0.2, 0.2], 0.5);
        for lam in [c(2.7, 0.0), c(0.3, 0.8)] {
            let d = shoot(&m, Chain::Even, Side::Direct, lam).unwrap();
            let a = shoot(&m, Chain::Even, Side::Adjoint, lam).unwrap();
            assert_eq!(d, a);
        }
    }

    #[test]
    fn free_rectangle_has_no_zeros() {
        let opts = SearchOptions::default();
        let m = CoefficientModel::constant(free());
        let rect = Rect::new(3.0, 5.0, -1.0, 1.0).unwrap();
        let r = find_complex_eigenvalues(&m, Chain::Odd, Side::Direct, rect, 6, &opts).unwrap();
        assert!(r.records.is_empty());
        assert!(r.unresolved.is_empty());
    }

    #[test]
    fn complex_pair_from_negative_sub_band() {
        let opts = SearchOptions::default();
        let m = CoefficientModel::constant(free()).with_override(Band::C, 1, -1.0);
        let rect = Rect::new(-0.5, 0.6, 0.1, 1.5).unwrap();
        let r = find_complex_eigenvalues(&m, Chain::Odd, Side::Direct, rect, 8, &opts).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!((r.records[0].lambda() - c(0.0, 0.5f64.sqrt())).norm() < 1e-10);
        assert_eq!(count_zeros(&m, Chain::Odd, Side::Direct, rect, &opts).unwrap(), Some(1));
    }

    #[test]
    fn winding_additivity() {
        let opts = SearchOptions::default();
        let m = CoefficientModel::constant(free()).with_override(Band::C, 1, -1.0);
        let parent = Rect::new(-1.0, 1.0, 0.2, 2.0).unwrap();
        let total = count_zeros(&m, Chain::Odd, Side::Direct, parent, &opts).unwrap().unwrap();
        let mid = 0.13;
        let kids = [
            Rect::new(-1.0, mid, 0.2, 1.1).unwrap(),
            Rect::new(mid, 1.0, 0.2, 1.1).unwrap(),
            Rect::new(-1.0, mid, 1.1, 2.0).unwrap(),
            Rect::new(mid, 1.0, 1.1, 2.0).unwrap(),
        ];
        let sum: i64 = kids
            .iter()
            .map(|k| count_zeros(&m, Chain::Odd, Side::Direct, *k, &opts).unwrap().unwrap())
            .sum();
        assert_eq!(total, 1);
        assert_eq!(sum, total);
    }

    #[test]
    fn discrete_spectrum_examples() {
        let opts = SearchOptions::default();
        let d = discrete_spectrum(&CoefficientModel::constant(free()), None, &opts).unwrap();
        assert!(d.set.is_empty());

        let d = discrete_spectrum(&single_site(), None, &opts).unwrap();
        assert_eq!(d.direct.len(), 1);
        assert_eq!(d.direct[0].chain, Chain::Odd);
        assert!(d.direct[0].matched_by_adjoint);
        assert_eq!(d.direct[0].multiplicity, 1);
        assert!((d.direct[0].re - 10.0 / 3.0).abs() < 1e-10);
        assert!(d.unresolved.is_empty());

        let b1 = CoefficientModel::constant(free()).with_override(Band::B, 1, 2.0);
        let d = discrete_spectrum(&b1, None, &opts).unwrap();
        assert_eq!(d.direct.len(), d.adjoint.len());
    }

    #[test]
    fn hypothesis_gate() {
        let m = CoefficientModel::power_law(free(), [0.5, 0.0, 0.0], 6.0);
        assert!(matches!(
            discrete_spectrum(&m, None, &SearchOptions::default()),
            Err(Error::HypothesisUnmet(_))
        ));
        let opts = SearchOptions {
            acknowledge_hypothesis: true,
            ..SearchOptions::default()
        };
        let d = discrete_spectrum(&m, None, &opts).unwrap();
        assert!(d.heuristic);
    }

    #[test]
    fn embedded_eigenvalue_is_reported() {
        let prof = LimitProfile::new(0.0, 5.0, 1.0, 1.0).unwrap();
        let m = CoefficientModel::constant(prof).with_override(Band::A, 1, 3.0);
        let d = discrete_spectrum(&m, None, &SearchOptions::default()).unwrap();
        assert!(d.set.is_empty());
        assert_eq!(d.embedded.len(), 1);
        assert!((d.embedded[0].re - 10.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn gaps_skip_intervals() {
        let ivs = [Interval::new(-2.0, 2.0).unwrap(), Interval::new(3.0, 7.0).unwrap()];
        assert_eq!(gaps(-10.0, 10.0, &ivs, 0.5), vec![(-10.0, -2.5), (7.5, 10.0)]);
        assert_eq!(gaps(-10.0, 10.0, &ivs, 0.1), vec![(-10.0, -2.1), (2.1, 2.9), (7.1, 10.0)]);
    }

    #[test]
    fn records_csv() {
        let r = EigenvalueRecord::new(c(1.5, 0.0), Chain::Odd, Side::Direct, 1e-12, 3);
        let mut out = Vec::new();
        write_records_csv(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1.5,0,odd,direct,1e-12,1,false");
    }
}
