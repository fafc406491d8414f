//! Sufficient conditions for the absence of eigenvalues inside the essential
//! spectrum: an exponential-rate test on the coefficients, and divergence of
//! the series of products of smallest transfer-matrix singular values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{Band, BandKind, BandSpec, CoefficientModel, Parity};
use crate::error::{Error, Result};
use crate::recurrence::{chain_interval, jost_boundary, ChainCoefficients, Chain, JostControls, ReducedParameter};
use crate::spectra::{essential_spectrum, MEMBERSHIP_TOL};

/// Reading of the `a` entry in the singular-value formula: `|(a_{2j+1} - λ)/b_{2j+1}|^2`.
pub const P_READING: &str = "P_j uses |(a_{2j+1} - lambda)/b_{2j+1}|^2 and |c_{2j-1}/b_{2j+1}|^2 (Q_j: indices 2j, 2j+2)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateStatus {
    Holds,
    Fails,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRate {
    pub band: Band,
    pub status: RateStatus,
    /// Geometric rate: exact for closed forms, fitted for tables.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVerdict {
    pub status: RateStatus,
    /// Largest per-band rate when the status is `holds` or `unknown`.
    pub certificate: Option<f64>,
    pub bands: Vec<BandRate>,
}

/// Least-squares fit of `ln|dev_n| = c + n ln q` over the nonzero deviations.
fn fitted_rate(devs: impl Iterator<Item = (usize, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = devs
        .filter(|(_, d)| *d != 0.0)
        .map(|(n, d)| (n as f64, d.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

fn band_rate(band: Band, spec: &BandSpec) -> BandRate {
    let (status, rate) = match &spec.kind {
        BandKind::Constant | BandKind::FiniteSupport => (RateStatus::Holds, Some(0.0)),
        BandKind::Exponential { amplitude, rate } => {
            (RateStatus::Holds, Some(if *amplitude == 0.0 { 0.0 } else { *rate }))
        }
        BandKind::PowerLaw { amplitude, .. } if *amplitude == 0.0 => (RateStatus::Holds, Some(0.0)),
        BandKind::PowerLaw { .. } => (RateStatus::Fails, None),
        BandKind::ExplicitTable { values, settle_index } => {
            // the two parities may settle at different speeds; fit each
            let fit = |parity| {
                fitted_rate(
                    (*settle_index..=values.len())
                        .filter(|n| Parity::of(*n) == parity)
                        .map(|n| (n, values[n - 1] - spec.limit(parity))),
                )
            };
            (RateStatus::Unknown, Some(fit(Parity::Odd).max(fit(Parity::Even))))
        }
    };
    BandRate { band, status, rate }
}

/// Whether every odd/even subsequence of every band converges exponentially.
pub fn exponential_rate_check(model: &CoefficientModel) -> RateVerdict {
    let bands: Vec<BandRate> = Band::ALL.iter().map(|&b| band_rate(b, model.band(b))).collect();
    let status = if bands.iter().any(|b| b.status == RateStatus::Fails) {
        RateStatus::Fails
    } else if bands.iter().any(|b| b.status == RateStatus::Unknown) {
        RateStatus::Unknown
    } else {
        RateStatus::Holds
    };
    let certificate = match status {
        RateStatus::Fails => None,
        _ => Some(bands.iter().filter_map(|b| b.rate).fold(0.0, f64::max)),
    };
    RateVerdict {
        status,
        certificate,
        bands,
    }
}

/// One term of the singular-value series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionTerm {
    pub j: usize,
    /// `P_j` (odd chain) or `Q_j` (even chain).
    pub p: f64,
    /// `|c/b|^2`.
    pub det_sq: f64,
    /// `|(a - λ)/b|^2`.
    pub diag_sq: f64,
    pub term: f64,
}

const DISC_TOL: f64 = 1e-12;
const SIGMA_TOL: f64 = 1e-10;

fn term_from(j: usize, det_sq: f64, diag_sq: f64) -> Result<ConditionTerm> {
    let p = det_sq + diag_sq + 1.0;
    // P^2 - 4|c/b|^2 = (P - 2|c/b|)(P + 2|c/b|) with P - 2|c/b| = (|c/b| - 1)^2 + |(a - λ)/b|^2
    let d = det_sq.sqrt();
    let disc = ((d - 1.0).powi(2) + diag_sq) * (p + 2.0 * d);
    if disc < -DISC_TOL {
        return Err(Error::NumericalDomain(format!("negative discriminant {disc:e} at j = {j}")));
    }
    // 0.5 (P - sqrt(disc)) rewritten without cancellation
    let denom = p + disc.max(0.0).sqrt();
    let term = if denom > 0.0 { (2.0 * det_sq / denom).sqrt() } else { 0.0 };
    Ok(ConditionTerm {
        j,
        p,
        det_sq,
        diag_sq,
        term,
    })
}

/// Terms `j = 1..=n_max` on `chain`, each checked against the transfer
/// matrix's smallest singular value.
pub fn series_terms(model: &CoefficientModel, chain: Chain, lambda: Complex64, n_max: usize) -> Result<Vec<ConditionTerm>> {
    if n_max == 0 {
        return Err(Error::domain("n_max must be positive"));
    }
    let co = ChainCoefficients::new(model, chain)?;
    let mut out = Vec::with_capacity(n_max);
    for j in 1..=n_max {
        let b = co.upper(j);
        if b == 0.0 {
            return Err(Error::Pivot {
                band: Band::B,
                index: chain.site(j) + 2,
            });
        }
        let det_sq = (co.lower(j) / b).powi(2);
        let diag_sq = ((co.mid(j) - lambda) / b).norm_sqr();
        let t = term_from(j, det_sq, diag_sq)?;
        let smin = crate::recurrence::transfer_matrix(model, chain, j, lambda)?.singular_values().1;
        if (smin - t.term).abs() > SIGMA_TOL * t.term.max(1.0) {
            return Err(Error::Consistency(format!(
                "term {} disagrees with transfer-matrix sigma_min {} at j = {j}",
                t.term, smin
            )));
        }
        out.push(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub partial_sum: f64,
    pub log_product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Partial sums passed the threshold at `index`.
    Threshold { index: usize, partial_sum: f64 },
    /// Terms sit at the limit value 1 and the products decay slower than `n^-1/2`.
    TermLimit {
        limit: f64,
        tail_deviation: f64,
        decay_exponent: f64,
    },
    /// Terms bounded by `q < 1` over the tail; `tail_estimate` bounds the full sum
    /// if they stay there.
    GeometricTail { q: f64, tail_estimate: f64 },
    None { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub chain: Chain,
    pub lambda: Complex64,
    pub status: VerdictStatus,
    pub threshold: f64,
    pub n_max: usize,
    /// Limit of the terms computed from the limit profile.
    pub term_limit: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub first_terms: Vec<ConditionTerm>,
    pub certificate: Certificate,
    pub reading: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceOptions {
    pub threshold: f64,
    pub n_max: usize,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        DivergenceOptions {
            threshold: 1e6,
            n_max: 10_000,
        }
    }
}

const LIMIT_ONE: f64 = 1.0 - 1e-9;
const Q_MAX: f64 = 1.0 - 1e-6;
const TAIL_BAND: f64 = 1e-3;
const DECAY_MAX: f64 = 0.5;

fn require_essential(model: &CoefficientModel, lambda: Complex64) -> Result<()> {
    let profile = model.validate()?;
    let ess = essential_spectrum(&profile)?;
    if !ess.contains(lambda, MEMBERSHIP_TOL) {
        return Err(Error::domain(format!("λ = {lambda} is outside the essential spectrum")));
    }
    Ok(())
}

/// Three-valued verdict on `sum_n prod_{j<=n} term_j = ∞`.
pub fn divergence_check(
    model: &CoefficientModel,
    chain: Chain,
    lambda: Complex64,
    opts: &DivergenceOptions,
) -> Result<DivergenceVerdict> {
    require_essential(model, lambda)?;
    if !(opts.threshold > 0.0) {
        return Err(Error::domain("threshold must be positive"));
    }
    let profile = model.limit_profile()?;
    let n_max = opts.n_max;
    let terms = series_terms(model, chain, lambda, n_max)?;

    // limit matrix [[0, 1], [-1, -p]]
    let p = ReducedParameter::new(&profile, lambda).get(chain);
    let term_limit = term_from(0, 1.0, p.norm_sqr())?.term;

    let mut log_prod = vec![0.0; n_max + 1];
    let mut checkpoints = Vec::new();
    let mut sum = 0.0;
    let mut crossed = None;
    let mut next_mark = 10;
    for t in &terms {
        log_prod[t.j] = log_prod[t.j - 1] + t.term.ln();
        sum += log_prod[t.j].exp();
        if t.j == next_mark || t.j == n_max {
            checkpoints.push(Checkpoint {
                n: t.j,
                partial_sum: sum,
                log_product: log_prod[t.j],
            });
            next_mark *= 10;
        }
        if crossed.is_none() && sum > opts.threshold {
            crossed = Some((t.j, sum));
        }
    }

    let half = (n_max / 2).max(1);
    let tail = &terms[half - 1..];
    let tail_max = tail.iter().map(|t| t.term).fold(0.0, f64::max);
    let tail_dev = tail.iter().map(|t| (t.term - term_limit).abs()).fold(0.0, f64::max);
    let decay = -(log_prod[n_max] - log_prod[half]) / std::f64::consts::LN_2;

    let (status, certificate) = if let Some((index, partial_sum)) = crossed {
        (VerdictStatus::Diverges, Certificate::Threshold { index, partial_sum })
    } else if term_limit >= LIMIT_ONE && tail_dev <= TAIL_BAND && decay < DECAY_MAX && n_max >= 2 {
        (
            VerdictStatus::Diverges,
            Certificate::TermLimit {
                limit: term_limit,
                tail_deviation: tail_dev,
                decay_exponent: decay,
            },
        )
    } else if term_limit < Q_MAX && tail_max <= Q_MAX {
        let q = tail_max.max(term_limit);
        (
            VerdictStatus::Converges,
            Certificate::GeometricTail {
                q,
                tail_estimate: sum + log_prod[n_max].exp() * q / (1.0 - q),
            },
        )
    } else {
        (
            VerdictStatus::Inconclusive,
            Certificate::None {
                reason: format!(
                    "term limit {term_limit}, tail max {tail_max}, decay exponent {decay}, partial sum {sum}"
                ),
            },
        )
    };

    Ok(DivergenceVerdict {
        chain,
        lambda,
        status,
        threshold: opts.threshold,
        n_max,
        term_limit,
        checkpoints,
        first_terms: terms.iter().take(20).copied().collect(),
        certificate,
        reading: P_READING.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Absence {
    GuaranteedAbsent,
    NotGuaranteed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsenceCondition {
    ExponentialRate,
    OddChainDivergence,
    EvenChainDivergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedVerdict {
    pub lambda: Complex64,
    pub status: Absence,
    pub fired: Vec<AbsenceCondition>,
    pub reasons: Vec<String>,
    pub rate: RateVerdict,
    pub odd: DivergenceVerdict,
    pub even: DivergenceVerdict,
}

/// Below this the boundary value of a chain is treated as a possible zero.
const OFF_INTERVAL_ZERO: f64 = 1e-8;

/// Combines the rate test and both divergence tests at `λ ∈ σ_ess`.
///
/// The rate test only rules out eigenvalues of a chain inside that chain's
/// own interval. When the two intervals differ, `λ` may lie in one interval
/// and be an isolated eigenvalue of the other chain, so the other chain's
/// boundary value is checked directly.
pub fn no_embedded_eigenvalue(model: &CoefficientModel, lambda: Complex64, opts: &DivergenceOptions) -> Result<EmbeddedVerdict> {
    require_essential(model, lambda)?;
    let profile = model.limit_profile()?;
    let rate = exponential_rate_check(model);
    let odd = divergence_check(model, Chain::Odd, lambda, opts)?;
    let even = divergence_check(model, Chain::Even, lambda, opts)?;

    let mut fired = Vec::new();
    let mut reasons = Vec::new();
    if rate.status == RateStatus::Holds {
        let mut covered = true;
        for chain in Chain::ALL {
            if chain_interval(&profile, chain).distance(lambda) <= MEMBERSHIP_TOL {
                continue;
            }
            let co = ChainCoefficients::new(model, chain)?;
            let f = jost_boundary(&co, lambda, &JostControls::default())?;
            if !f.converged || f.f0.norm() <= OFF_INTERVAL_ZERO {
                covered = false;
                reasons.push(format!(
                    "rate test holds but λ lies outside the {chain}-chain interval where that chain's boundary value is {:.3e}",
                    f.f0.norm()
                ));
            }
        }
        if covered {
            fired.push(AbsenceCondition::ExponentialRate);
        }
    } else {
        reasons.push(format!("exponential-rate test: {:?}", rate.status).to_lowercase());
    }
    for (v, cond) in [(&odd, AbsenceCondition::OddChainDivergence), (&even, AbsenceCondition::EvenChainDivergence)] {
        if v.status == VerdictStatus::Diverges {
            fired.push(cond);
        } else {
            reasons.push(format!("{}-chain series: {:?}", v.chain, v.status).to_lowercase());
        }
    }
    let status = if fired.is_empty() {
        Absence::NotGuaranteed
    } else {
        Absence::GuaranteedAbsent
    };
    Ok(EmbeddedVerdict {
        lambda,
        status,
        fired,
        reasons,
        rate,
        odd,
        even,
    })
}
