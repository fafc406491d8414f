//! Band operators `T`, `T0` and `K = T - T0` acting on finitely supported
//! vectors, their leading finite sections and the norm estimates that go
//! with them.

use std::io::{BufRead, Write};
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coeffs::{Band, CoefficientModel, LimitProfile, Parity};
use crate::error::{Error, Result};

/// The exponent `p` of the sequence space `l_p`, restricted to `1 < p < inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SpaceOrder(f64);

impl SpaceOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(SpaceOrder(p))
        } else {
            Err(Error::domain(format!("space order p must lie in (1, inf), got {p}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SpaceOrder {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        SpaceOrder::new(p)
    }
}

impl From<SpaceOrder> for f64 {
    fn from(p: SpaceOrder) -> f64 {
        p.0
    }
}

/// Anything with a modulus, so norms work for real and complex vectors.
pub trait Modulus {
    fn modulus(&self) -> f64;
}

impl Modulus for f64 {
    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl Modulus for Complex64 {
    fn modulus(&self) -> f64 {
        self.norm()
    }
}

pub fn lp_norm<T: Modulus>(x: &[T], p: SpaceOrder) -> f64 {
    let p = p.get();
    let scale = x.iter().map(Modulus::modulus).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = x.iter().map(|v| (v.modulus() / scale).powf(p)).sum();
    scale * sum.powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// The perturbed operator `T`.
    T,
    /// The limit operator `T0`.
    T0,
    /// The compact perturbation `K = T - T0`.
    K,
}

/// A penta-diagonal operator with bands at offsets `-2, 0, +2`.
///
/// Row `i` holds `c_{i-2}` in column `i - 2`, `a_i` on the diagonal and `b_i`
/// in column `i + 2` (indices start at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct BandOperator {
    kind: OperatorKind,
    model: CoefficientModel,
    profile: LimitProfile,
}

impl BandOperator {
    pub fn full(model: &CoefficientModel) -> Result<Self> {
        let profile = model.validate()?;
        Ok(BandOperator {
            kind: OperatorKind::T,
            model: model.clone(),
            profile,
        })
    }

    pub fn limit(profile: LimitProfile) -> Result<Self> {
        profile.validate()?;
        Ok(BandOperator {
            kind: OperatorKind::T0,
            model: CoefficientModel::constant(profile),
            profile,
        })
    }

    pub fn perturbation(model: &CoefficientModel) -> Result<Self> {
        let profile = model.validate()?;
        Ok(BandOperator {
            kind: OperatorKind::K,
            model: model.clone(),
            profile,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn profile(&self) -> LimitProfile {
        self.profile
    }

    fn band_entry(&self, band: Band, n: usize) -> f64 {
        let value = self.model.at(band, n);
        if self.kind == OperatorKind::K {
            let parity = Parity::of(n);
            let limit = match band {
                Band::A => self.profile.r(parity),
                Band::B | Band::C => self.profile.s(parity),
            };
            value - limit
        } else {
            value
        }
    }

    /// Diagonal entry at row `i`.
    pub fn diag(&self, i: usize) -> f64 {
        self.band_entry(Band::A, i)
    }

    /// Entry at `(i, i + 2)`.
    pub fn upper(&self, i: usize) -> f64 {
        self.band_entry(Band::B, i)
    }

    /// Entry at `(j + 2, j)`.
    pub fn lower(&self, j: usize) -> f64 {
        self.band_entry(Band::C, j)
    }

    /// Matrix entry `(i, j)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        if i == 0 || j == 0 {
            return Err(Error::domain("matrix indices start at 1"));
        }
        Ok(if i == j {
            self.diag(i)
        } else if j == i + 2 {
            self.upper(i)
        } else if i == j + 2 {
            self.lower(j)
        } else {
            0.0
        })
    }

    /// Applies the operator to `x`, treated as zero beyond its length; the
    /// result is truncated to the same length.
    pub fn apply<T>(&self, x: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        if x.is_empty() {
            return Err(Error::domain("cannot apply an operator to an empty vector"));
        }
        let len = x.len();
        let y = (0..len)
            .map(|k| {
                let i = k + 1;
                let mut acc = x[k] * self.diag(i);
                if k >= 2 {
                    acc = acc + x[k - 2] * self.lower(i - 2);
                }
                if k + 2 < len {
                    acc = acc + x[k + 2] * self.upper(i);
                }
                acc
            })
            .collect();
        Ok(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Lower and upper bounds for `||T0||_p`.
pub fn norm_bounds(profile: &LimitProfile, p: SpaceOrder) -> Result<NormBounds> {
    profile.validate()?;
    let q = p.get();
    let pw = |v: f64| v.abs().powf(q);
    let lower = ((pw(profile.r1) + pw(profile.r2) + pw(profile.s1) + pw(profile.s2)) / 2.0).powf(1.0 / q);
    let upper = (3f64.powf(q - 1.0)
        * (pw(profile.r1) + 2.0 * pw(profile.s1) + pw(profile.r2) + 2.0 * pw(profile.s2)))
    .powf(1.0 / q);
    Ok(NormBounds { lower, upper })
}

/// Ratio `||T0 e||_p / ||e||_p` at `e = (1, 1, 0, ...)`, which attains the lower bound.
pub fn witness_ratio(profile: &LimitProfile, p: SpaceOrder) -> Result<f64> {
    let op = BandOperator::limit(*profile)?;
    let e = [1.0, 1.0, 0.0, 0.0];
    let y = op.apply(&e)?;
    Ok(lp_norm(&y, p) / lp_norm(&e, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub ratios: Vec<f64>,
    pub sup: f64,
}

/// Monte-Carlo sampling of `||T0 x||_p / ||x||_p` over Gaussian vectors with
/// random support lengths in `2..=len`.
pub fn sample_norm_ratios<R: Rng + ?Sized>(
    profile: &LimitProfile,
    p: SpaceOrder,
    samples: usize,
    len: usize,
    rng: &mut R,
) -> Result<NormSample> {
    if len < 2 {
        return Err(Error::domain("sample vectors need length at least 2"));
    }
    let op = BandOperator::limit(*profile)?;
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let support = rng.random_range(2..=len);
        // two zero slots hold the sub-band images of the last entries
        let mut x = vec![0.0; support + 2];
        for v in x.iter_mut().take(support) {
            *v = rng.sample(StandardNormal);
        }
        let nx = lp_norm(&x, p);
        if nx == 0.0 {
            continue;
        }
        let y = op.apply(&x)?;
        ratios.push(lp_norm(&y, p) / nx);
    }
    let sup = ratios.iter().copied().fold(0.0, f64::max);
    Ok(NormSample { ratios, sup })
}

/// The null sequences `u`, `v`, `w` forming the bands of `K`.
#[derive(Debug, Clone)]
pub struct PerturbationEntries {
    model: CoefficientModel,
    profile: LimitProfile,
}

impl PerturbationEntries {
    pub fn new(model: &CoefficientModel) -> Result<Self> {
        let profile = model.validate()?;
        Ok(PerturbationEntries {
            model: model.clone(),
            profile,
        })
    }

    pub fn u(&self, n: usize) -> f64 {
        self.model.at(Band::A, n) - self.profile.r(Parity::of(n))
    }

    pub fn v(&self, n: usize) -> f64 {
        self.model.at(Band::B, n) - self.profile.s(Parity::of(n))
    }

    pub fn w(&self, n: usize) -> f64 {
        self.model.at(Band::C, n) - self.profile.s(Parity::of(n))
    }

    /// `sup_{k >= m}` of the deviation of one band, evaluated analytically
    /// for closed-form kinds and by scanning for tables.
    pub fn sup_from(&self, band: Band, m: usize) -> f64 {
        self.model.band(band).deviation_sup_from(m)
    }
}

/// Upper bound on `||K - K_n||_p`, where `K_n` keeps the first `n` rows of `K`.
pub fn tail_bound(entries: &PerturbationEntries, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("tail bound needs n >= 2"));
    }
    let m = n - 1;
    Ok(entries.sup_from(Band::C, m) + entries.sup_from(Band::A, m) + entries.sup_from(Band::B, m))
}

/// A bound on `||T||_p` valid for every `p`: the sum of the band suprema.
pub fn operator_norm_bound(model: &CoefficientModel) -> Result<f64> {
    model.validate()?;
    const SCAN: usize = 64;
    let mut total = 0.0;
    for band in Band::ALL {
        let spec = model.band(band);
        let head = (1..SCAN).map(|n| spec.value(n).abs()).fold(0.0, f64::max);
        let tail = spec.odd_limit.abs().max(spec.even_limit.abs()) + spec.deviation_sup_from(SCAN);
        total += head.max(tail);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionSource {
    T,
    T0,
    K,
    /// A section read from band-triple data.
    External,
}

impl From<OperatorKind> for SectionSource {
    fn from(k: OperatorKind) -> Self {
        match k {
            OperatorKind::T => SectionSource::T,
            OperatorKind::T0 => SectionSource::T0,
            OperatorKind::K => SectionSource::K,
        }
    }
}

/// Leading `N x N` principal submatrix of a band operator.
///
/// Stored by bands: `a[k]`, `b[k]`, `c[k]` hold the operator's `a_{k+1}`,
/// `b_{k+1}`, `c_{k+1}`. Only `b_1..b_{N-2}` and `c_1..c_{N-2}` enter the
/// matrix; the rest is kept so the band-triple export is complete.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSection {
    pub source: SectionSource,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl FiniteSection {
    pub fn from_bands(source: SectionSource, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::domain("a finite section needs N >= 1"));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::domain("band arrays must all have length N"));
        }
        Ok(FiniteSection { source, a, b, c })
    }

    pub fn size(&self) -> usize {
        self.a.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.a
    }

    /// Super-band entries `b_1..b_{N-2}` as they appear in the matrix.
    pub fn upper(&self) -> &[f64] {
        &self.b[..self.size().saturating_sub(2)]
    }

    /// Sub-band entries `c_1..c_{N-2}` as they appear in the matrix.
    pub fn lower(&self) -> &[f64] {
        &self.c[..self.size().saturating_sub(2)]
    }

    /// Entry `(i, j)`, 0-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.size();
        assert!(i < n && j < n, "index ({i}, {j}) out of range for N = {n}");
        if i == j {
            self.a[i]
        } else if j == i + 2 {
            self.b[i]
        } else if i == j + 2 {
            self.c[j]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    pub fn transpose(&self) -> FiniteSection {
        FiniteSection {
            source: self.source,
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
        }
    }

    /// Max-row-sum norm, an upper bound for the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                let mut s = self.a[i].abs();
                if i + 2 < self.size() {
                    s += self.b[i].abs();
                }
                if i >= 2 {
                    s += self.c[i - 2].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Full dense matrix, row-major, comma separated.
    pub fn write_dense_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.size();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Band triples `n,a_n,b_n,c_n` with a header line.
    pub fn write_band_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,a,b,c")?;
        for k in 0..self.size() {
            writeln!(w, "{},{},{},{}", k + 1, self.a[k], self.b[k], self.c[k])?;
        }
        Ok(())
    }

    pub fn read_band_csv<R: BufRead>(r: R) -> Result<Self> {
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::domain(format!("reading band csv: {e}")))?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('n')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::domain(format!("band csv line {}: expected 4 fields", lineno + 1)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::domain(format!("band csv line {}: bad number {s:?}", lineno + 1)))
            };
            let n: usize = fields[0]
                .parse()
                .map_err(|_| Error::domain(format!("band csv line {}: bad index", lineno + 1)))?;
            if n != a.len() + 1 {
                return Err(Error::domain(format!("band csv line {}: indices must run 1, 2, ...", lineno + 1)));
            }
            a.push(parse(fields[1])?);
            b.push(parse(fields[2])?);
            c.push(parse(fields[3])?);
        }
        FiniteSection::from_bands(SectionSource::External, a, b, c)
    }
}

/// Leading `N x N` section of `op`.
pub fn truncate(op: &BandOperator, n: usize) -> Result<FiniteSection> {
    if n == 0 {
        return Err(Error::domain("section size N must be at least 1"));
    }
    let a = (1..=n).map(|i| op.diag(i)).collect();
    let b = (1..=n).map(|i| op.upper(i)).collect();
    let c = (1..=n).map(|i| op.lower(i)).collect();
    FiniteSection::from_bands(op.kind().into(), a, b, c)
}
