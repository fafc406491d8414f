//! Finite-section ground truth.
//!
//! A section with bands at offsets `-2, 0, +2` is permuted into its odd and
//! even index blocks, each tridiagonal. Blocks whose off-diagonal products
//! `b c` are all non-negative are symmetrized by a diagonal similarity and
//! solved with implicit QL; the rest go through Francis QR.

mod hqr;
mod tridiag;

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientModel;
use crate::error::{Error, Result};
use crate::operators::{truncate, BandOperator, FiniteSection};
use crate::spectra::SpectralSet;

use hqr::{hqr, Hessenberg};
use tridiag::symmetric_tridiagonal_eigenvalues;

pub const MAX_SECTION: usize = 8192;
/// Subdiagonals below `DEFLATION_REL * ‖section‖` are set to zero.
pub const DEFLATION_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockMethod {
    SymmetricQl,
    HessenbergQr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub size: usize,
    pub method: BlockMethod,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpectrum {
    pub n: usize,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub blocks: Vec<BlockReport>,
    pub deflation_tol: f64,
}

impl SectionSpectrum {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im")?;
        for z in &self.eigenvalues {
            writeln!(w, "{},{}", z.re, z.im)?;
        }
        Ok(())
    }

    /// Eigenvalues farther than `eps` from `set`.
    pub fn outside(&self, set: &SpectralSet, eps: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|z| set.distance(*z) > eps)
            .collect()
    }
}

/// Tridiagonal block: `upper[k]` at `(k, k+1)`, `lower[k]` at `(k+1, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalBlock {
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl TridiagonalBlock {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.size();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.upper[i]
            } else if i == j + 1 {
                self.lower[j]
            } else {
                0.0
            }
        })
    }
}

/// The blocks on 0-based indices `0, 2, 4, ...` and `1, 3, 5, ...`.
pub fn chain_blocks(section: &FiniteSection) -> (TridiagonalBlock, TridiagonalBlock) {
    let n = section.size();
    let block = |start: usize| {
        let idx: Vec<usize> = (start..n).step_by(2).collect();
        TridiagonalBlock {
            diag: idx.iter().map(|&i| section.get(i, i)).collect(),
            upper: idx.windows(2).map(|w| section.get(w[0], w[1])).collect(),
            lower: idx.windows(2).map(|w| section.get(w[1], w[0])).collect(),
        }
    };
    (block(0), block(1))
}

fn block_eigenvalues(block: &TridiagonalBlock, abs_tol: f64) -> Result<(Vec<Complex64>, BlockReport)> {
    let m = block.size();
    let sign_symmetric = block.upper.iter().zip(&block.lower).all(|(u, l)| u * l >= 0.0);
    if sign_symmetric {
        let e: Vec<f64> = block
            .upper
            .iter()
            .zip(&block.lower)
            .map(|(u, l)| (u * l).sqrt())
            .collect();
        let (ev, iterations) = symmetric_tridiagonal_eigenvalues(&block.diag, &e, abs_tol)?;
        return Ok((
            ev.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            BlockReport {
                size: m,
                method: BlockMethod::SymmetricQl,
                iterations,
            },
        ));
    }
    let mut h = Hessenberg::zeros(m);
    for i in 0..m {
        h.set(i, i, block.diag[i]);
        if i + 1 < m {
            h.set(i, i + 1, block.upper[i]);
            h.set(i + 1, i, block.lower[i]);
        }
    }
    let out = hqr(h, abs_tol)?;
    Ok((
        out.eigenvalues,
        BlockReport {
            size: m,
            method: BlockMethod::HessenbergQr,
            iterations: out.iterations,
        },
    ))
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All `N` eigenvalues of the section, counted with multiplicity.
pub fn section_eigenvalues(section: &FiniteSection) -> Result<SectionSpectrum> {
    let n = section.size();
    if n > MAX_SECTION {
        return Err(Error::domain(format!("section size {n} exceeds the cap {MAX_SECTION}")));
    }
    let abs_tol = DEFLATION_REL * section.inf_norm();
    let (odd, even) = chain_blocks(section);
    let (r_odd, r_even) = rayon::join(|| block_eigenvalues(&odd, abs_tol), || block_eigenvalues(&even, abs_tol));
    let (mut ev, rep_odd) = r_odd?;
    let (ev_even, rep_even) = r_even?;
    ev.extend(ev_even);
    sort_complex(&mut ev);
    Ok(SectionSpectrum {
        n,
        eigenvalues: ev,
        blocks: vec![rep_odd, rep_even],
        deflation_tol: abs_tol,
    })
}

/// Eigenvalues of the odd-chain and even-chain blocks separately.
pub fn chain_spectra(section: &FiniteSection) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if section.size() > MAX_SECTION {
        return Err(Error::domain(format!("section size {} exceeds the cap {MAX_SECTION}", section.size())));
    }
    let abs_tol = DEFLATION_REL * section.inf_norm();
    let (odd, even) = chain_blocks(section);
    let (a, b) = rayon::join(|| block_eigenvalues(&odd, abs_tol), || block_eigenvalues(&even, abs_tol));
    let (mut a, mut b) = (a?.0, b?.0);
    sort_complex(&mut a);
    sort_complex(&mut b);
    Ok((a, b))
}

/// Eigenvalues of the unpermuted section through Householder Hessenberg
/// reduction and QR; `O(N^3)`, meant for cross-checks on small sections.
pub fn dense_eigenvalues(section: &FiniteSection) -> Result<Vec<Complex64>> {
    let n = section.size();
    if n > 1024 {
        return Err(Error::domain("dense path is limited to N <= 1024"));
    }
    let hess = section.to_dense().hessenberg().h();
    let mut h = Hessenberg::zeros(n);
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            h.set(i, j, hess[(i, j)]);
        }
    }
    let mut ev = hqr(h, DEFLATION_REL * section.inf_norm())?.eigenvalues;
    sort_complex(&mut ev);
    Ok(ev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitEntry {
    pub n: usize,
    /// Largest distance from a section eigenvalue to the predicted set.
    pub max_distance: f64,
    /// Largest distance from a point of the predicted intervals to the
    /// nearest section eigenvalue.
    pub fill_distance: f64,
    /// Eigenvalues outside the `eps`-fattening of the predicted set.
    pub outliers: Vec<Complex64>,
    /// For each outlier, distance to the nearest outlier at the previous `N`.
    pub outlier_drift: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitReport {
    pub eps: f64,
    pub entries: Vec<PortraitEntry>,
    /// `max_distance` and `fill_distance` ratios between consecutive entries.
    pub distance_trend: Vec<f64>,
    pub fill_trend: Vec<f64>,
}

fn nearest(points: &[Complex64], z: Complex64) -> f64 {
    points.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Sup over the interval part of `set` of the distance to `points`.
///
/// The sup is attained at an endpoint or at a point of the real line
/// equidistant from two eigenvalues adjacent in real part.
pub fn fill_distance(set: &SpectralSet, points: &[Complex64]) -> f64 {
    if points.is_empty() {
        return if set.intervals().is_empty() { 0.0 } else { f64::INFINITY };
    }
    let mut sorted = points.to_vec();
    sort_complex(&mut sorted);
    let mut worst: f64 = 0.0;
    for iv in set.intervals() {
        let mut cand = vec![iv.lo, iv.hi];
        for w in sorted.windows(2) {
            let (z1, z2) = (w[0], w[1]);
            let dx = z2.re - z1.re;
            if dx > 0.0 {
                let x = (z2.norm_sqr() - z1.norm_sqr()) / (2.0 * dx);
                if x > iv.lo && x < iv.hi {
                    cand.push(x);
                }
            }
        }
        for x in cand {
            worst = worst.max(nearest(&sorted, Complex64::new(x, 0.0)));
        }
    }
    worst
}

/// Section spectra of `T` for each `N` in `schedule`, compared with `predicted`.
pub fn spectral_portrait(
    model: &CoefficientModel,
    schedule: &[usize],
    predicted: &SpectralSet,
    eps: f64,
) -> Result<PortraitReport> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("N-schedule must be non-empty and strictly increasing"));
    }
    let op = BandOperator::full(model)?;
    let mut entries: Vec<PortraitEntry> = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let spec = section_eigenvalues(&truncate(&op, n)?)?;
        let max_distance = spec
            .eigenvalues
            .iter()
            .map(|z| predicted.distance(*z))
            .fold(0.0, f64::max);
        let fill = fill_distance(predicted, &spec.eigenvalues);
        let outliers = spec.outside(predicted, eps);
        let drift = match entries.last() {
            Some(prev) if !prev.outliers.is_empty() => {
                outliers.iter().map(|z| Some(nearest(&prev.outliers, *z))).collect()
            }
            _ => vec![None; outliers.len()],
        };
        entries.push(PortraitEntry {
            n,
            max_distance,
            fill_distance: fill,
            outliers,
            outlier_drift: drift,
        });
    }
    let ratio = |f: fn(&PortraitEntry) -> f64| -> Vec<f64> {
        entries.windows(2).map(|w| f(&w[1]) / f(&w[0])).collect()
    };
    Ok(PortraitReport {
        eps,
        distance_trend: ratio(|e| e.max_distance),
        fill_trend: ratio(|e| e.fill_distance),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Band, LimitProfile};
    use crate::operators::SectionSource;
    use crate::spectra::essential_spectrum;

    fn free() -> LimitProfile {
        LimitProfile::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn t0_section(p: LimitProfile, n: usize) -> FiniteSection {
        truncate(&BandOperator::limit(p).unwrap(), n).unwrap()
    }

    #[test]
    fn tiny_sections() {
        let s = section_eigenvalues(&t0_section(free(), 2)).unwrap();
        assert_eq!(s.eigenvalues, vec![Complex64::new(0.0, 0.0); 2]);

        let s = section_eigenvalues(&t0_section(free(), 6)).unwrap();
        let r2 = 2f64.sqrt();
        let want = [-r2, -r2, 0.0, 0.0, r2, r2];
        for (z, w) in s.eigenvalues.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-14 && z.im == 0.0);
        }
        let (odd, even) = chain_blocks(&t0_section(free(), 6));
        assert_eq!(odd.size(), 3);
        assert_eq!(even.size(), 3);
    }

    #[test]
    fn permutation_identity_nonsymmetric() {
        let m = CoefficientModel::exponential(LimitProfile::new(0.3, -0.5, 1.0, -0.8).unwrap(), [0.4, 0.6, -0.9], 0.7)
            .with_override(Band::C, 3, -1.5);
        let sec = truncate(&BandOperator::full(&m).unwrap(), 40).unwrap();
        let fast = section_eigenvalues(&sec).unwrap();
        assert!(fast.blocks.iter().any(|b| b.method == BlockMethod::HessenbergQr));
        let dense = dense_eigenvalues(&sec).unwrap();
        assert_eq!(fast.eigenvalues.len(), 40);
        for z in &dense {
            assert!(nearest(&fast.eigenvalues, *z) < 1e-8, "{z}");
        }
        for z in &fast.eigenvalues {
            assert!(nearest(&dense, *z) < 1e-8, "{z}");
        }
    }

    #[test]
    fn transpose_has_same_spectrum() {
        let m = CoefficientModel::constant(free())
            .with_override(Band::B, 1, 2.0)
            .with_override(Band::C, 2, -0.5);
        let sec = truncate(&BandOperator::full(&m).unwrap(), 60).unwrap();
        let a = section_eigenvalues(&sec).unwrap();
        let b = section_eigenvalues(&sec.transpose()).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn symmetric_sections_are_real() {
        let m = CoefficientModel::exponential(free(), [0.5, 0.3, 0.3], 0.5);
        let sec = truncate(&BandOperator::full(&m).unwrap(), 101).unwrap();
        let s = section_eigenvalues(&sec).unwrap();
        assert_eq!(s.eigenvalues.len(), 101);
        assert!(s.eigenvalues.iter().all(|z| z.im.abs() < 1e-8));
        assert!(s.blocks.iter().all(|b| b.method == BlockMethod::SymmetricQl));
    }

    #[test]
    fn cap_enforced() {
        let sec = FiniteSection::from_bands(
            SectionSource::External,
            vec![0.0; MAX_SECTION + 1],
            vec![1.0; MAX_SECTION + 1],
            vec![1.0; MAX_SECTION + 1],
        )
        .unwrap();
        assert!(matches!(section_eigenvalues(&sec), Err(Error::Domain(_))));
    }

    #[test]
    fn fill_distance_of_grid() {
        let set = SpectralSet::from_intervals(vec![crate::spectra::Interval::new(0.0, 1.0).unwrap()]);
        let pts: Vec<Complex64> = (0..=4).map(|k| Complex64::new(k as f64 / 4.0, 0.0)).collect();
        assert!((fill_distance(&set, &pts) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn portrait_two_clusters() {
        let p = LimitProfile::new(0.0, 5.0, 1.0, 1.0).unwrap();
        let ess = essential_spectrum(&p).unwrap();
        let r = spectral_portrait(&CoefficientModel::constant(p), &[64, 256], &ess, 1e-8).unwrap();
        for e in &r.entries {
            assert!(e.max_distance < 1e-8);
            assert!(e.outliers.is_empty());
        }
        assert!(r.fill_trend[0] < 0.5);
    }

    #[test]
    fn csv_export() {
        let s = section_eigenvalues(&t0_section(free(), 2)).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "re,im\n0,0\n0,0\n");
    }
}
