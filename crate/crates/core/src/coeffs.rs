//! Coefficient sequences of the three bands and their odd/even limits.
//!
//! A [`CoefficientModel`] generates the diagonal `a`, the super-band `b`
//! (entry `b_n` sits at row `n`, column `n + 2`) and the sub-band `c`
//! (entry `c_n` sits at row `n + 2`, column `n`). Every band converges along
//! odd and even indices separately; the limits are declared, never estimated.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    A,
    B,
    C,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::A, Band::B, Band::C];
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Band::A => "a",
            Band::B => "b",
            Band::C => "c",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// How a band approaches its limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum BandKind {
    Constant,
    /// `limit + amplitude * rate^n`.
    Exponential { amplitude: f64, rate: f64 },
    /// `limit + amplitude * n^(-exponent)`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// Equal to the limits except at the override indices.
    FiniteSupport,
    /// Explicit values for `n = 1..=values.len()`, the limits afterwards.
    /// Beyond `settle_index` the deviation from the limit must not grow.
    ExplicitTable { values: Vec<f64>, settle_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BandSpec {
    pub odd_limit: f64,
    pub even_limit: f64,
    #[serde(flatten)]
    pub kind: BandKind,
    /// `(index, value)` pairs replacing the generated entry; indices start at 1.
    #[serde(default)]
    pub overrides: Vec<(usize, f64)>,
}

impl BandSpec {
    pub fn constant(odd_limit: f64, even_limit: f64) -> Self {
        BandSpec {
            odd_limit,
            even_limit,
            kind: BandKind::Constant,
            overrides: Vec::new(),
        }
    }

    pub fn exponential(odd_limit: f64, even_limit: f64, amplitude: f64, rate: f64) -> Self {
        BandSpec {
            kind: BandKind::Exponential { amplitude, rate },
            ..BandSpec::constant(odd_limit, even_limit)
        }
    }

    pub fn power_law(odd_limit: f64, even_limit: f64, amplitude: f64, exponent: f64) -> Self {
        BandSpec {
            kind: BandKind::PowerLaw {
                amplitude,
                exponent,
            },
            ..BandSpec::constant(odd_limit, even_limit)
        }
    }

    pub fn finite_support(odd_limit: f64, even_limit: f64, overrides: Vec<(usize, f64)>) -> Self {
        BandSpec {
            kind: BandKind::FiniteSupport,
            overrides,
            ..BandSpec::constant(odd_limit, even_limit)
        }
    }

    pub fn table(odd_limit: f64, even_limit: f64, values: Vec<f64>, settle_index: usize) -> Self {
        BandSpec {
            kind: BandKind::ExplicitTable {
                values,
                settle_index,
            },
            ..BandSpec::constant(odd_limit, even_limit)
        }
    }

    pub fn limit(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Odd => self.odd_limit,
            Parity::Even => self.even_limit,
        }
    }

    /// Entry `n >= 1`; the caller guarantees the index is valid.
    #[inline]
    pub(crate) fn value(&self, n: usize) -> f64 {
        if let Some(&(_, v)) = self.overrides.iter().find(|(i, _)| *i == n) {
            return v;
        }
        let limit = self.limit(Parity::of(n));
        match &self.kind {
            BandKind::Constant | BandKind::FiniteSupport => limit,
            BandKind::Exponential { amplitude, rate } => limit + amplitude * powu(*rate, n),
            BandKind::PowerLaw {
                amplitude,
                exponent,
            } => limit + amplitude * (n as f64).powf(-exponent),
            BandKind::ExplicitTable { values, .. } => values.get(n - 1).copied().unwrap_or(limit),
        }
    }

    pub fn deviation(&self, n: usize) -> f64 {
        self.value(n) - self.limit(Parity::of(n))
    }

    /// Exact or conservative `sup_{k >= m} |entry(k) - limit(k)|`.
    pub fn deviation_sup_from(&self, m: usize) -> f64 {
        let m = m.max(1);
        let envelope = match &self.kind {
            BandKind::Constant | BandKind::FiniteSupport => 0.0,
            BandKind::Exponential { amplitude, rate } => amplitude.abs() * powu(*rate, m),
            BandKind::PowerLaw {
                amplitude,
                exponent,
            } => amplitude.abs() * (m as f64).powf(-exponent),
            BandKind::ExplicitTable { values, .. } => (m..=values.len())
                .filter(|k| !self.overrides.iter().any(|(i, _)| i == k))
                .map(|k| (values[k - 1] - self.limit(Parity::of(k))).abs())
                .fold(0.0, f64::max),
        };
        self.overrides
            .iter()
            .filter(|(i, _)| *i >= m)
            .map(|&(i, v)| (v - self.limit(Parity::of(i))).abs())
            .fold(envelope, f64::max)
    }

    /// Largest index at which the band may differ from the pure limit pattern
    /// when the kind itself has no tail (`None` for infinite tails).
    pub(crate) fn support_end(&self) -> Option<usize> {
        let over = self.overrides.iter().map(|(i, _)| *i).max().unwrap_or(0);
        match &self.kind {
            BandKind::Constant | BandKind::FiniteSupport => Some(over),
            BandKind::ExplicitTable { values, .. } => Some(over.max(values.len())),
            BandKind::Exponential { amplitude, .. } | BandKind::PowerLaw { amplitude, .. } => {
                if *amplitude == 0.0 {
                    Some(over)
                } else {
                    None
                }
            }
        }
    }

    fn validate(&self, band: Band) -> Result<()> {
        if !self.odd_limit.is_finite() || !self.even_limit.is_finite() {
            return Err(Error::domain(format!("band {band}: limits must be finite")));
        }
        match &self.kind {
            BandKind::Exponential { amplitude, rate } => {
                if !amplitude.is_finite() || !(*rate > 0.0 && *rate < 1.0) {
                    return Err(Error::domain(format!(
                        "band {band}: exponential rate must lie in (0, 1), got {rate}"
                    )));
                }
            }
            BandKind::PowerLaw {
                amplitude,
                exponent,
            } => {
                if !amplitude.is_finite() || !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::domain(format!(
                        "band {band}: power-law exponent must be positive, got {exponent}"
                    )));
                }
            }
            BandKind::ExplicitTable {
                values,
                settle_index,
            } => {
                if *settle_index == 0 {
                    return Err(Error::domain(format!("band {band}: settle index starts at 1")));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain(format!("band {band}: table entries must be finite")));
                }
                let end = values.len().max(*settle_index) + 1;
                let devs: Vec<f64> = (*settle_index..=end).map(|n| self.deviation(n).abs()).collect();
                if let Some(w) = devs.windows(2).position(|w| w[1] > w[0]) {
                    return Err(Error::ModelInconsistency(format!(
                        "band {band}: |entry - limit| increases at index {} beyond settle index {settle_index}",
                        settle_index + w + 1
                    )));
                }
            }
            BandKind::Constant | BandKind::FiniteSupport => {}
        }
        for (k, &(i, v)) in self.overrides.iter().enumerate() {
            if i == 0 {
                return Err(Error::domain(format!("band {band}: override index 0 (indices start at 1)")));
            }
            if !v.is_finite() {
                return Err(Error::domain(format!("band {band}: override at {i} is not finite")));
            }
            if self.overrides[..k].iter().any(|(j, _)| *j == i) {
                return Err(Error::domain(format!("band {band}: duplicate override index {i}")));
            }
        }
        Ok(())
    }
}

#[inline]
fn powu(base: f64, n: usize) -> f64 {
    if n > i32::MAX as usize {
        return base.powf(n as f64);
    }
    base.powi(n as i32)
}

/// Limits `(r1, r2, s1, s2)` that define the unperturbed operator `T0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitProfile {
    pub r1: f64,
    pub r2: f64,
    pub s1: f64,
    pub s2: f64,
}

impl LimitProfile {
    pub fn new(r1: f64, r2: f64, s1: f64, s2: f64) -> Result<Self> {
        let profile = LimitProfile { r1, r2, s1, s2 };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.r1, self.r2, self.s1, self.s2].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("limit profile entries must be finite"));
        }
        if self.s1 == 0.0 {
            return Err(Error::domain("s1 must be nonzero"));
        }
        if self.s2 == 0.0 {
            return Err(Error::domain("s2 must be nonzero"));
        }
        Ok(())
    }

    pub fn r(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Odd => self.r1,
            Parity::Even => self.r2,
        }
    }

    pub fn s(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Odd => self.s1,
            Parity::Even => self.s2,
        }
    }
}

/// Generator of the band sequences `{a_n}`, `{b_n}`, `{c_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub a: BandSpec,
    pub b: BandSpec,
    pub c: BandSpec,
}

impl CoefficientModel {
    pub fn from_bands(a: BandSpec, b: BandSpec, c: BandSpec) -> Self {
        CoefficientModel { a, b, c }
    }

    /// The model whose entries equal the limits everywhere, i.e. `T = T0`.
    pub fn constant(p: LimitProfile) -> Self {
        CoefficientModel {
            a: BandSpec::constant(p.r1, p.r2),
            b: BandSpec::constant(p.s1, p.s2),
            c: BandSpec::constant(p.s1, p.s2),
        }
    }

    /// Exponentially convergent bands; `amplitudes` are ordered `(a, b, c)`.
    pub fn exponential(p: LimitProfile, amplitudes: [f64; 3], rate: f64) -> Self {
        CoefficientModel {
            a: BandSpec::exponential(p.r1, p.r2, amplitudes[0], rate),
            b: BandSpec::exponential(p.s1, p.s2, amplitudes[1], rate),
            c: BandSpec::exponential(p.s1, p.s2, amplitudes[2], rate),
        }
    }

    pub fn power_law(p: LimitProfile, amplitudes: [f64; 3], exponent: f64) -> Self {
        CoefficientModel {
            a: BandSpec::power_law(p.r1, p.r2, amplitudes[0], exponent),
            b: BandSpec::power_law(p.s1, p.s2, amplitudes[1], exponent),
            c: BandSpec::power_law(p.s1, p.s2, amplitudes[2], exponent),
        }
    }

    /// Replaces entry `n` of `band` by `value`, keeping everything else.
    pub fn with_override(mut self, band: Band, n: usize, value: f64) -> Self {
        let spec = self.band_mut(band);
        spec.overrides.retain(|(i, _)| *i != n);
        spec.overrides.push((n, value));
        self
    }

    pub fn band(&self, band: Band) -> &BandSpec {
        match band {
            Band::A => &self.a,
            Band::B => &self.b,
            Band::C => &self.c,
        }
    }

    fn band_mut(&mut self, band: Band) -> &mut BandSpec {
        match band {
            Band::A => &mut self.a,
            Band::B => &mut self.b,
            Band::C => &mut self.c,
        }
    }

    /// Checks parameters and the limit structure.
    pub fn validate(&self) -> Result<LimitProfile> {
        for band in Band::ALL {
            self.band(band).validate(band)?;
        }
        self.limit_profile()
    }

    pub fn entry(&self, band: Band, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("band indices start at 1"));
        }
        Ok(self.band(band).value(n))
    }

    /// Unchecked entry access for hot loops; `n` must be at least 1.
    #[inline]
    pub(crate) fn at(&self, band: Band, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.band(band).value(n)
    }

    pub fn limit_profile(&self) -> Result<LimitProfile> {
        for parity in [Parity::Odd, Parity::Even] {
            let (b, c) = (self.b.limit(parity), self.c.limit(parity));
            if b != c {
                let which = if parity == Parity::Odd { "odd" } else { "even" };
                return Err(Error::ModelInconsistency(format!(
                    "b and c bands declare different {which} limits ({b} vs {c})"
                )));
            }
        }
        LimitProfile::new(self.a.odd_limit, self.a.even_limit, self.b.odd_limit, self.b.even_limit)
    }

    /// True when the super- and sub-bands coincide entrywise (`b = c`).
    pub fn is_symmetric(&self) -> bool {
        self.b == self.c
    }

    /// The model of the transposed matrix: bands `b` and `c` swapped.
    pub fn transposed(&self) -> Self {
        CoefficientModel {
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
        }
    }

    /// Index beyond which every band equals its limit pattern, if finite.
    pub fn support_end(&self) -> Option<usize> {
        let mut end = 0;
        for band in Band::ALL {
            end = end.max(self.band(band).support_end()?);
        }
        Some(end)
    }
}
