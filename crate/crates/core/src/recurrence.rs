//! Odd and even three-term recurrences.
//!
//! Restricting `T x = λ x` to odd indices (`y_n = x_{2n-1}`) or even indices
//! (`z_n = x_{2n}`) gives, for `n >= 0`,
//!
//! ```text
//! lower(n) y_n + (mid(n) - λ) y_{n+1} + upper(n) y_{n+2} = 0
//! ```
//!
//! with `lower(n) = c_{2n-1}`, `mid(n) = a_{2n+1}`, `upper(n) = b_{2n+1}` on the
//! odd chain and `c_{2n}`, `a_{2n+2}`, `b_{2n+2}` on the even chain. There is
//! no `c` entry for `n = 0`; the chain's limit `s` stands in, so `y_0 = 0` is
//! the eigenvalue condition while the equation keeps the constant-coefficient
//! shape of the limit operator.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{Band, CoefficientModel, LimitProfile, Parity};
use crate::error::{Error, Result};
use crate::spectra::{Interval, MEMBERSHIP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Odd,
    Even,
}

impl Chain {
    pub const ALL: [Chain; 2] = [Chain::Odd, Chain::Even];

    pub fn parity(self) -> Parity {
        match self {
            Chain::Odd => Parity::Odd,
            Chain::Even => Parity::Even,
        }
    }

    /// Index into the full sequence of chain element `n >= 1`.
    pub fn site(self, n: usize) -> usize {
        match self {
            Chain::Odd => 2 * n - 1,
            Chain::Even => 2 * n,
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chain::Odd => "odd",
            Chain::Even => "even",
        })
    }
}

/// `[r - 2|s|, r + 2|s|]` for the given chain.
pub fn chain_interval(profile: &LimitProfile, chain: Chain) -> Interval {
    let (r, s) = (profile.r(chain.parity()), profile.s(chain.parity()).abs());
    Interval { lo: r - 2.0 * s, hi: r + 2.0 * s }
}

/// `p1 = (r1 - λ)/s1`, `p2 = (r2 - λ)/s2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParameter {
    pub p1: Complex64,
    pub p2: Complex64,
}

impl ReducedParameter {
    pub fn new(profile: &LimitProfile, lambda: Complex64) -> Self {
        ReducedParameter {
            p1: (profile.r1 - lambda) / profile.s1,
            p2: (profile.r2 - lambda) / profile.s2,
        }
    }

    pub fn get(&self, chain: Chain) -> Complex64 {
        match chain {
            Chain::Odd => self.p1,
            Chain::Even => self.p2,
        }
    }
}

const DEGENERATE_TOL: f64 = 1e-14;
const NEAR_DEGENERATE_TOL: f64 = 1e-8;

/// Roots of `y^2 + p y + 1 = 0` ordered so that `|alpha1| <= |alpha2|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub degenerate: bool,
}

pub fn characteristic_roots(p: Complex64) -> CharacteristicRoots {
    let disc = (p * p - 4.0).sqrt();
    // pick the sign that avoids cancellation, then use alpha1 * alpha2 = 1
    let large = if (p.conj() * disc).re >= 0.0 {
        (-p - disc) / 2.0
    } else {
        (-p + disc) / 2.0
    };
    let degenerate = (p - 2.0).norm() <= DEGENERATE_TOL || (p + 2.0).norm() <= DEGENERATE_TOL;
    CharacteristicRoots {
        alpha1: 1.0 / large,
        alpha2: large,
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormCase {
    PlusTwo,
    MinusTwo,
    Generic,
}

/// Solution of `y_n + p y_{n+1} + y_{n+2} = 0` with `y_0 = 0` and given `y_1`.
///
/// Degenerate cases are written `(c1 + c2 n) (-p/2)^n`, the generic case
/// `c1 alpha1^n + c2 alpha2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub case: ClosedFormCase,
    pub p: Complex64,
    pub y1: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub roots: CharacteristicRoots,
    /// Within `1e-8` of `±2` the generic formula is evaluated by recurrence.
    near_degenerate: bool,
}

impl ClosedFormSolution {
    pub fn eval(&self, n: usize) -> Complex64 {
        let nf = n as f64;
        match self.case {
            ClosedFormCase::PlusTwo => {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                self.y1 * nf * sign
            }
            ClosedFormCase::MinusTwo => self.y1 * nf,
            ClosedFormCase::Generic if self.near_degenerate => self.y1 * chebyshev_quotient(self.p, n),
            ClosedFormCase::Generic => {
                let (a1, a2) = (self.roots.alpha1, self.roots.alpha2);
                self.c1 * cpowu(a1, n) + self.c2 * cpowu(a2, n)
            }
        }
    }

    pub fn values(&self, m: usize) -> Vec<Complex64> {
        (0..=m).map(|n| self.eval(n)).collect()
    }
}

/// `(alpha1^n - alpha2^n) / (alpha1 - alpha2)` without the 0/0.
fn chebyshev_quotient(p: Complex64, n: usize) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = -p * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn cpowu(z: Complex64, n: usize) -> Complex64 {
    if n <= i32::MAX as usize {
        z.powi(n as i32)
    } else {
        z.powf(n as f64)
    }
}

/// Closed-form solution of the limit recurrence on `chain` with `y_0 = 0`.
pub fn closed_form_t0(
    lambda: Complex64,
    profile: &LimitProfile,
    chain: Chain,
    y1: Complex64,
) -> Result<ClosedFormSolution> {
    profile.validate()?;
    let p = ReducedParameter::new(profile, lambda).get(chain);
    let roots = characteristic_roots(p);
    let zero = Complex64::new(0.0, 0.0);
    if roots.degenerate {
        let plus = (p - 2.0).norm() <= (p + 2.0).norm();
        let (case, c2) = if plus {
            (ClosedFormCase::PlusTwo, -y1)
        } else {
            (ClosedFormCase::MinusTwo, y1)
        };
        return Ok(ClosedFormSolution {
            case,
            p,
            y1,
            c1: zero,
            c2,
            roots,
            near_degenerate: false,
        });
    }
    let gap = roots.alpha1 - roots.alpha2;
    if gap.norm() == 0.0 {
        return Err(Error::Instability(format!("coincident roots for non-degenerate p = {p}")));
    }
    let near = (p - 2.0).norm() <= NEAR_DEGENERATE_TOL || (p + 2.0).norm() <= NEAR_DEGENERATE_TOL;
    Ok(ClosedFormSolution {
        case: ClosedFormCase::Generic,
        p,
        y1,
        c1: y1 / gap,
        c2: -y1 / gap,
        roots,
        near_degenerate: near,
    })
}

/// Coefficients of one chain's recurrence.
#[derive(Debug, Clone, Copy)]
pub struct ChainCoefficients<'a> {
    model: &'a CoefficientModel,
    chain: Chain,
    ghost: f64,
}

impl<'a> ChainCoefficients<'a> {
    pub fn new(model: &'a CoefficientModel, chain: Chain) -> Result<Self> {
        let profile = model.limit_profile()?;
        Ok(ChainCoefficients {
            model,
            chain,
            ghost: profile.s(chain.parity()),
        })
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn model(&self) -> &'a CoefficientModel {
        self.model
    }

    #[inline]
    pub fn lower(&self, n: usize) -> f64 {
        match (self.chain, n) {
            (_, 0) => self.ghost,
            (Chain::Odd, _) => self.model.at(Band::C, 2 * n - 1),
            (Chain::Even, _) => self.model.at(Band::C, 2 * n),
        }
    }

    #[inline]
    pub fn mid(&self, n: usize) -> f64 {
        self.model.at(Band::A, self.shifted(n))
    }

    #[inline]
    pub fn upper(&self, n: usize) -> f64 {
        self.model.at(Band::B, self.shifted(n))
    }

    #[inline]
    fn shifted(&self, n: usize) -> usize {
        match self.chain {
            Chain::Odd => 2 * n + 1,
            Chain::Even => 2 * n + 2,
        }
    }

    fn upper_pivot(&self, n: usize) -> Error {
        Error::Pivot {
            band: Band::B,
            index: self.shifted(n),
        }
    }

    fn lower_pivot(&self, n: usize) -> Error {
        Error::Pivot {
            band: Band::C,
            index: self.shifted(n) - 2,
        }
    }

    /// Residual of equation `n` and the sum of its term magnitudes.
    pub fn residual(&self, n: usize, lambda: Complex64, y: [Complex64; 3]) -> (f64, f64) {
        let terms = [
            y[0] * self.lower(n),
            y[1] * (self.mid(n) - lambda),
            y[2] * self.upper(n),
        ];
        let r = (terms[0] + terms[1] + terms[2]).norm();
        (r, terms.iter().map(|t| t.norm()).sum())
    }
}

const RESIDUAL_TOL: f64 = 1e-9;

/// Forward iteration from `(y_0, y_1)`, returning `y_0..=y_m`.
pub fn forward_iterate(
    model: &CoefficientModel,
    chain: Chain,
    lambda: Complex64,
    seed: (Complex64, Complex64),
    m: usize,
) -> Result<Vec<Complex64>> {
    if m == 0 {
        return Err(Error::domain("forward_iterate needs m >= 1"));
    }
    let co = ChainCoefficients::new(model, chain)?;
    let mut y = Vec::with_capacity(m + 1);
    y.push(seed.0);
    y.push(seed.1);
    for n in 0..m.saturating_sub(1) {
        let b = co.upper(n);
        if b == 0.0 {
            return Err(co.upper_pivot(n));
        }
        let next = -(y[n] * co.lower(n) + y[n + 1] * (co.mid(n) - lambda)) / b;
        if !next.is_finite() {
            return Err(Error::Instability(format!("forward iteration overflowed at n = {}", n + 2)));
        }
        y.push(next);
        let (r, scale) = co.residual(n, lambda, [y[n], y[n + 1], y[n + 2]]);
        if r > RESIDUAL_TOL * scale {
            return Err(Error::Instability(format!(
                "recurrence residual {r:e} at n = {n} exceeds tolerance"
            )));
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalSolutionResult {
    pub chain: Chain,
    pub lambda: Complex64,
    /// `y_0..=y_m`, scaled so that `y_1 = 1` unless `y_1` vanishes.
    pub values: Vec<Complex64>,
    pub boundary_residual: f64,
    pub start_index: usize,
    pub converged: bool,
}

const MINIMAL_CAP: usize = 1 << 16;
const MINIMAL_TOL: f64 = 1e-8;
const RESCALE: f64 = 1e150;

/// Backward recurrence from `(y_{n+1}, y_n) = (0, 1)`; returns `y_0..=y_m`.
fn backward_from(co: &ChainCoefficients, lambda: Complex64, start: usize, m: usize) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; m + 1];
    let (mut y1, mut y2) = (Complex64::new(1.0, 0.0), zero);
    if start <= m {
        out[start] = y1;
    }
    for n in (0..start).rev() {
        let c = co.lower(n);
        if c == 0.0 {
            return Err(co.lower_pivot(n));
        }
        let y0 = -(y1 * (co.mid(n) - lambda) + y2 * co.upper(n)) / c;
        y2 = y1;
        y1 = y0;
        if n <= m {
            out[n] = y0;
        }
        let big = y1.norm().max(y2.norm());
        if big > RESCALE {
            y1 /= big;
            y2 /= big;
            for v in out.iter_mut().skip(n) {
                *v /= big;
            }
        }
    }
    Ok(out)
}

fn normalize(values: &mut [Complex64]) {
    let pivot = if values.len() > 1 && values[1].norm() > 1e-30 {
        values[1]
    } else {
        let big = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if big == 0.0 {
            return;
        }
        Complex64::new(big, 0.0)
    };
    for v in values.iter_mut() {
        *v /= pivot;
    }
}

/// The decaying solution on `chain`, computed by backward recurrence with
/// start-index doubling.
pub fn minimal_solution(
    model: &CoefficientModel,
    chain: Chain,
    lambda: Complex64,
    m: usize,
) -> Result<MinimalSolutionResult> {
    if m == 0 {
        return Err(Error::domain("minimal_solution needs m >= 1"));
    }
    let profile = model.validate()?;
    let iv = chain_interval(&profile, chain);
    if iv.distance(lambda) <= MEMBERSHIP_TOL {
        return Err(Error::SpectralRegion(format!(
            "λ = {lambda} lies in the {chain}-chain interval [{}, {}]",
            iv.lo, iv.hi
        )));
    }
    let co = ChainCoefficients::new(model, chain)?;
    let cap = MINIMAL_CAP.max(4 * (m + 64));
    let mut start = 2 * (m + 64);
    let mut prev = backward_from(&co, lambda, start, m)?;
    normalize(&mut prev);
    loop {
        let next_start = 2 * start;
        if next_start > cap {
            return Err(Error::Instability(format!(
                "backward recurrence for λ = {lambda} did not stabilize by start index {start}"
            )));
        }
        let mut cur = backward_from(&co, lambda, next_start, m)?;
        normalize(&mut cur);
        let delta = (cur[0] - prev[0]).norm();
        start = next_start;
        if delta <= MINIMAL_TOL * cur[0].norm().max(1.0) {
            return Ok(MinimalSolutionResult {
                chain,
                lambda,
                boundary_residual: cur[0].norm(),
                values: cur,
                start_index: start,
                converged: true,
            });
        }
        prev = cur;
    }
}

/// Boundary value of the solution that behaves like `alpha1^n` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostValue {
    pub f0: Complex64,
    pub f1: Complex64,
    pub alpha: Complex64,
    pub start_index: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostControls {
    pub start: usize,
    pub cap: usize,
    pub tol: f64,
}

impl Default for JostControls {
    fn default() -> Self {
        JostControls {
            start: 64,
            cap: 1 << 16,
            tol: 1e-11,
        }
    }
}

/// `(y_0, y_1) * alpha^start` for the backward solution seeded with
/// `(y_start, y_{start+1}) = (1, alpha)`.
fn jost_from(co: &ChainCoefficients, lambda: Complex64, alpha: Complex64, start: usize) -> Result<(Complex64, Complex64)> {
    let (mut y1, mut y2) = (Complex64::new(1.0, 0.0), alpha);
    let mut log_scale = 0.0;
    for n in (0..start).rev() {
        let c = co.lower(n);
        if c == 0.0 {
            return Err(co.lower_pivot(n));
        }
        let y0 = -(y1 * (co.mid(n) - lambda) + y2 * co.upper(n)) / c;
        y2 = y1;
        y1 = y0;
        let big = y1.norm().max(y2.norm());
        if big > RESCALE {
            y1 /= big;
            y2 /= big;
            log_scale += big.ln();
        }
    }
    let modulus = alpha.norm();
    let phase = cpowu(alpha / modulus, start);
    let factor = phase * (log_scale + start as f64 * modulus.ln()).exp();
    let (f0, f1) = (y1 * factor, y2 * factor);
    if !f0.is_finite() || !f1.is_finite() {
        return Err(Error::Instability(format!("boundary value overflowed at λ = {lambda}")));
    }
    Ok((f0, f1))
}

/// Boundary value `f0(λ)` of the solution asymptotic to `alpha1^n`.
///
/// `f0` is analytic off the chain's interval and vanishes exactly at the
/// chain's eigenvalues; for the limit model it is identically 1.
pub fn jost_boundary(co: &ChainCoefficients, lambda: Complex64, controls: &JostControls) -> Result<JostValue> {
    let profile = co.model().limit_profile()?;
    let chain = co.chain();
    let iv = chain_interval(&profile, chain);
    if iv.distance(lambda) <= MEMBERSHIP_TOL {
        return Err(Error::SpectralRegion(format!(
            "λ = {lambda} lies in the {chain}-chain interval [{}, {}]",
            iv.lo, iv.hi
        )));
    }
    let p = ReducedParameter::new(&profile, lambda).get(chain);
    let alpha = characteristic_roots(p).alpha1;

    if let Some(end) = co.model().support_end() {
        let start = end / 2 + 2;
        let (f0, f1) = jost_from(co, lambda, alpha, start)?;
        return Ok(JostValue {
            f0,
            f1,
            alpha,
            start_index: start,
            converged: true,
        });
    }

    let mut start = controls.start.max(2);
    let (mut f0, mut f1) = jost_from(co, lambda, alpha, start)?;
    while 2 * start <= controls.cap {
        start *= 2;
        let (g0, g1) = jost_from(co, lambda, alpha, start)?;
        let scale = g0.norm().max((g1 / alpha).norm());
        let delta = (g0 - f0).norm();
        f0 = g0;
        f1 = g1;
        if delta <= controls.tol * scale {
            return Ok(JostValue {
                f0,
                f1,
                alpha,
                start_index: start,
                converged: true,
            });
        }
    }
    Ok(JostValue {
        f0,
        f1,
        alpha,
        start_index: start,
        converged: false,
    })
}

/// Companion matrix mapping `(y_j, y_{j+1})` to `(y_{j+1}, y_{j+2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub chain: Chain,
    pub j: usize,
    pub m: [[Complex64; 2]; 2],
}

impl TransferMatrix {
    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (
            self.m[0][0] * v.0 + self.m[0][1] * v.1,
            self.m[1][0] * v.0 + self.m[1][1] * v.1,
        )
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Singular values `(σ_max, σ_min)` from the Frobenius norm and determinant.
    pub fn singular_values(&self) -> (f64, f64) {
        let f = self.frobenius_sq();
        let d = self.det().norm();
        // first row is (0, 1), so F - 2|det| = (|m10| - 1)^2 + |m11|^2 exactly
        let gap = (self.m[1][0].norm() - 1.0).powi(2) + self.m[1][1].norm_sqr();
        let disc = (gap * (f + 2.0 * d)).sqrt();
        let smax = ((f + disc) / 2.0).sqrt();
        let smin = if smax > 0.0 { d / smax } else { 0.0 };
        (smax, smin)
    }
}

pub fn transfer_matrix(model: &CoefficientModel, chain: Chain, j: usize, lambda: Complex64) -> Result<TransferMatrix> {
    if j == 0 {
        return Err(Error::domain("transfer matrices are indexed from j = 1"));
    }
    let co = ChainCoefficients::new(model, chain)?;
    let b = co.upper(j);
    if b == 0.0 {
        return Err(co.upper_pivot(j));
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Ok(TransferMatrix {
        chain,
        j,
        m: [
            [zero, one],
            [Complex64::new(-co.lower(j) / b, 0.0), -(co.mid(j) - lambda) / b],
        ],
    })
}

/// Writes `n,re,im` rows.
pub fn write_trace_csv<W: Write>(mut w: W, values: &[Complex64]) -> io::Result<()> {
    writeln!(w, "n,re,im")?;
    for (n, v) in values.iter().enumerate() {
        writeln!(w, "{n},{},{}", v.re, v.im)?;
    }
    Ok(())
}
