//! One function per task; each returns the JSON result, CSV files and a plot.

use num_complex::Complex64;
use pentaspec::conditions::{exponential_rate_check, no_embedded_eigenvalue, DivergenceOptions};
use pentaspec::eigensolve::{discrete_spectrum, write_records_csv, DiscreteSpectrum, EigenvalueRecord};
use pentaspec::operators::{norm_bounds, operator_norm_bound, sample_norm_ratios, truncate, witness_ratio};
use pentaspec::oracle::{section_eigenvalues, spectral_portrait};
use pentaspec::recurrence::chain_interval;
use pentaspec::spectra::{essential_spectrum, fine_spectrum_t};
use pentaspec::{BandOperator, Chain, CoefficientModel, Error, LimitProfile, SpaceOrder, SpectralSet};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{JobConfig, Task};
use crate::output::{Plot, Series, Style};

#[derive(Debug)]
pub enum JobError {
    /// Exit 1.
    Config(String),
    /// Exit 2.
    Model(Error),
    /// Exit 3, with an optional structured attachment.
    Numerical(Error, Option<Value>),
    Io(std::io::Error),
}

impl JobError {
    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Config(_) | JobError::Io(_) => 1,
            JobError::Model(_) => 2,
            JobError::Numerical(..) => 3,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            JobError::Config(_) => "config".into(),
            JobError::Io(_) => "io".into(),
            JobError::Model(e) | JobError::Numerical(e, _) => error_kind(e).into(),
        }
    }

    pub fn message(&self) -> String {
        match self {
            JobError::Config(m) => m.clone(),
            JobError::Io(e) => e.to_string(),
            JobError::Model(e) | JobError::Numerical(e, _) => e.to_string(),
        }
    }

    pub fn attachment(&self) -> Option<Value> {
        match self {
            JobError::Numerical(Error::AdjointMismatch { direct, adjoint }, _) => {
                Some(json!({ "direct": direct, "adjoint": adjoint }))
            }
            JobError::Numerical(_, a) => a.clone(),
            _ => None,
        }
    }
}

impl From<std::io::Error> for JobError {
    fn from(e: std::io::Error) -> Self {
        JobError::Io(e)
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::ModelInconsistency(_) => "model-inconsistency",
        Error::Pivot { .. } => "pivot",
        Error::SpectralRegion(_) => "spectral-region",
        Error::Instability(_) => "instability",
        Error::NumericalDomain(_) => "numerical-domain",
        Error::Convergence { .. } => "convergence",
        Error::Consistency(_) => "consistency",
        Error::AdjointMismatch { .. } => "adjoint-mismatch",
        Error::HypothesisUnmet(_) => "hypothesis-unmet",
    }
}

fn numerical(e: Error) -> JobError {
    JobError::Numerical(e, None)
}

pub struct TaskOutput {
    pub result: Value,
    pub heuristic: bool,
    pub csv: Vec<(String, String)>,
    pub plot: Plot,
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<String, JobError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| JobError::Io(std::io::Error::other(e)))
}

/// Serialized name of a unit enum variant.
fn label<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|s| s.as_str().map(String::from))
        .unwrap_or_default()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn interval_series(set: &SpectralSet) -> Series {
    Series {
        title: "essential spectrum".into(),
        style: Style::Lines,
        segments: set.intervals().iter().map(|iv| vec![(iv.lo, 0.0), (iv.hi, 0.0)]).collect(),
    }
}

fn scatter(title: &str, points: impl IntoIterator<Item = Complex64>) -> Series {
    Series::new(title, Style::Points, points.into_iter().map(|z| (z.re, z.im)).collect())
}

pub fn run(cfg: &JobConfig, seed: u64) -> Result<TaskOutput, JobError> {
    let model = cfg.build_model();
    let profile = model.validate().map_err(JobError::Model)?;
    match cfg.task {
        Task::NormBounds => norm_bounds_task(cfg, &model, &profile, seed),
        Task::EssentialSpectrum => essential_task(&profile),
        Task::Eigenvalues => eigenvalues_task(cfg, &model, &profile),
        Task::FineSpectrum => fine_spectrum_task(cfg, &model, &profile),
        Task::CheckConditions => conditions_task(cfg, &model, &profile),
        Task::Truncate => truncate_task(cfg, &model, &profile),
        Task::Portrait => portrait_task(cfg, &model, &profile),
    }
}

fn norm_bounds_task(cfg: &JobConfig, model: &CoefficientModel, profile: &LimitProfile, seed: u64) -> Result<TaskOutput, JobError> {
    let p = SpaceOrder::new(cfg.p).map_err(|e| JobError::Config(e.to_string()))?;
    let bounds = norm_bounds(profile, p).map_err(numerical)?;
    let witness = witness_ratio(profile, p).map_err(numerical)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = cfg.params.samples.unwrap_or(1000);
    let len = cfg.params.sample_len.unwrap_or(32);
    let sample = sample_norm_ratios(profile, p, samples, len, &mut rng).map_err(numerical)?;
    let t_bound = operator_norm_bound(model).map_err(numerical)?;
    let mean = sample.ratios.iter().sum::<f64>() / sample.ratios.len().max(1) as f64;
    let result = json!({
        "p": cfg.p,
        "profile": profile,
        "t0_lower": bounds.lower,
        "t0_upper": bounds.upper,
        "witness_ratio": witness,
        "sample": { "count": sample.ratios.len(), "vector_length": len, "sup": sample.sup, "mean": mean },
        "t_norm_bound": t_bound,
    });
    let mut csv = String::from("k,ratio\n");
    for (k, r) in sample.ratios.iter().enumerate() {
        csv.push_str(&format!("{k},{r}\n"));
    }
    let n = sample.ratios.len() as f64;
    let mut plot = Plot::new("norm ratios of T0", "sample", "ratio");
    plot.series.push(Series::new(
        "ratio",
        Style::Points,
        sample.ratios.iter().enumerate().map(|(k, r)| (k as f64, *r)).collect(),
    ));
    plot.series.push(Series::new("lower bound", Style::Lines, vec![(0.0, bounds.lower), (n, bounds.lower)]));
    plot.series.push(Series::new("upper bound", Style::Lines, vec![(0.0, bounds.upper), (n, bounds.upper)]));
    Ok(TaskOutput {
        result,
        heuristic: false,
        csv: vec![("norm_ratios.csv".into(), csv)],
        plot,
    })
}

fn intervals_csv(set: &SpectralSet) -> String {
    let mut out = String::from("lo,hi\n");
    for iv in set.intervals() {
        out.push_str(&format!("{},{}\n", iv.lo, iv.hi));
    }
    out
}

fn essential_task(profile: &LimitProfile) -> Result<TaskOutput, JobError> {
    let ess = essential_spectrum(profile).map_err(numerical)?;
    let result = json!({
        "profile": profile,
        "intervals": ess.intervals(),
        "odd": chain_interval(profile, Chain::Odd),
        "even": chain_interval(profile, Chain::Even),
    });
    let mut plot = Plot::new("essential spectrum", "Re λ", "Im λ");
    plot.series.push(interval_series(&ess));
    Ok(TaskOutput {
        result,
        heuristic: false,
        csv: vec![("intervals.csv".into(), intervals_csv(&ess))],
        plot,
    })
}

fn search(cfg: &JobConfig, model: &CoefficientModel) -> Result<DiscreteSpectrum, JobError> {
    discrete_spectrum(model, cfg.region(), &cfg.search_options()).map_err(|e| match e {
        Error::HypothesisUnmet(_) => {
            let verdict = exponential_rate_check(model);
            JobError::Numerical(e, Some(json!({ "rate_verdict": verdict })))
        }
        other => numerical(other),
    })
}

fn embedded_warnings(d: &DiscreteSpectrum) -> Vec<String> {
    d.embedded
        .iter()
        .map(|r| {
            format!(
                "{}-chain eigenvalue {} lies inside the other chain's interval; it is an eigenvalue embedded in the essential spectrum",
                r.chain, r.re
            )
        })
        .collect()
}

fn records_csv(records: &[EigenvalueRecord]) -> Result<String, JobError> {
    csv_string(|w| write_records_csv(w, records))
}

fn eigenvalues_task(cfg: &JobConfig, model: &CoefficientModel, profile: &LimitProfile) -> Result<TaskOutput, JobError> {
    let d = search(cfg, model)?;
    let ess = essential_spectrum(profile).map_err(numerical)?;
    let result = json!({
        "region": d.region,
        "eigenvalues": d.direct,
        "adjoint": d.adjoint,
        "embedded": d.embedded,
        "warnings": embedded_warnings(&d),
        "unresolved": d.unresolved,
        "additivity_violations": d.additivity_violations,
        "rate": d.rate,
        "heuristic": d.heuristic,
    });
    let mut all = d.direct.clone();
    all.extend(d.adjoint.iter().cloned());
    let mut csv = vec![("eigenvalues.csv".to_string(), records_csv(&all)?)];
    if !d.embedded.is_empty() {
        csv.push(("embedded.csv".into(), records_csv(&d.embedded)?));
    }
    let mut plot = Plot::new("discrete spectrum", "Re λ", "Im λ");
    plot.series.push(interval_series(&ess));
    plot.series.push(scatter("eigenvalues", d.direct.iter().map(|r| r.lambda())));
    Ok(TaskOutput {
        result,
        heuristic: d.heuristic,
        csv,
        plot,
    })
}

fn fine_spectrum_task(cfg: &JobConfig, model: &CoefficientModel, profile: &LimitProfile) -> Result<TaskOutput, JobError> {
    let d = search(cfg, model)?;
    let opts = cfg.search_options();
    let report = fine_spectrum_t(profile, &d.set, opts.collar).map_err(numerical)?;
    let check = report.check_identities();
    let result = json!({
        "sets": report,
        "identities": check,
        "identities_hold": check.all_hold(),
        "eigenvalues": d.direct,
        "embedded": d.embedded,
        "warnings": embedded_warnings(&d),
        "unresolved": d.unresolved,
        "heuristic": d.heuristic,
    });
    let named = [
        ("spectrum", &report.spectrum),
        ("point", &report.point),
        ("residual", &report.residual),
        ("continuous", &report.continuous),
        ("essential", &report.essential),
        ("discrete", &report.discrete),
        ("compression", &report.compression),
        ("approximate", &report.approximate),
        ("defect", &report.defect),
    ];
    let mut csv = String::from("set,kind,a,b\n");
    for (name, set) in named {
        for iv in set.intervals() {
            csv.push_str(&format!("{name},interval,{},{}\n", iv.lo, iv.hi));
        }
        for p in set.points() {
            csv.push_str(&format!("{name},point,{},{}\n", p.re, p.im));
        }
    }
    let mut plot = Plot::new("spectrum", "Re λ", "Im λ");
    plot.series.push(interval_series(&report.essential));
    plot.series.push(scatter("discrete", report.discrete.points().iter().map(|p| p.value())));
    Ok(TaskOutput {
        result,
        heuristic: d.heuristic,
        csv: vec![("fine_spectrum.csv".into(), csv)],
        plot,
    })
}

fn default_lambdas(profile: &LimitProfile) -> Result<Vec<f64>, JobError> {
    let ess = essential_spectrum(profile).map_err(numerical)?;
    Ok(ess
        .intervals()
        .iter()
        .flat_map(|iv| (0..=20).map(move |k| iv.lo + (iv.hi - iv.lo) * k as f64 / 20.0))
        .collect())
}

fn conditions_task(cfg: &JobConfig, model: &CoefficientModel, profile: &LimitProfile) -> Result<TaskOutput, JobError> {
    let d = DivergenceOptions::default();
    let opts = DivergenceOptions {
        threshold: cfg.params.threshold.unwrap_or(d.threshold),
        n_max: cfg.params.n_max.unwrap_or(d.n_max),
    };
    let mut lambdas = cfg.lambdas();
    if lambdas.is_empty() {
        lambdas = default_lambdas(profile)?;
    }
    let rate = exponential_rate_check(model);
    let mut verdicts = Vec::with_capacity(lambdas.len());
    for lam in &lambdas {
        verdicts.push(no_embedded_eigenvalue(model, Complex64::new(*lam, 0.0), &opts).map_err(numerical)?);
    }
    let mut summary = String::from("lambda,status,odd,even\n");
    let mut sums = String::from("lambda,chain,n,partial_sum,log_product\n");
    let mut plot = Plot::new("partial sums of the condition series", "n", "partial sum");
    plot.logscale_y = true;
    for v in &verdicts {
        summary.push_str(&format!(
            "{},{},{},{}\n",
            v.lambda.re,
            label(&v.status),
            label(&v.odd.status),
            label(&v.even.status)
        ));
        for dv in [&v.odd, &v.even] {
            for c in &dv.checkpoints {
                sums.push_str(&format!("{},{},{},{},{}\n", v.lambda.re, dv.chain, c.n, c.partial_sum, c.log_product));
            }
            plot.series.push(Series::new(
                format!("λ = {}, {}", v.lambda.re, dv.chain),
                Style::Steps,
                dv.checkpoints.iter().map(|c| (c.n as f64, c.partial_sum)).collect(),
            ));
        }
    }
    let result = json!({
        "rate": rate,
        "threshold": opts.threshold,
        "n_max": opts.n_max,
        "verdicts": verdicts,
    });
    Ok(TaskOutput {
        result,
        heuristic: false,
        csv: vec![("conditions.csv".into(), summary), ("partial_sums.csv".into(), sums)],
        plot,
    })
}

fn truncate_task(cfg: &JobConfig, model: &CoefficientModel, profile: &LimitProfile) -> Result<TaskOutput, JobError> {
    let n = cfg.params.n.unwrap_or(64);
    let op = BandOperator::full(model).map_err(numerical)?;
    let section = truncate(&op, n).map_err(numerical)?;
    let spec = section_eigenvalues(&section).map_err(numerical)?;
    let ess = essential_spectrum(profile).map_err(numerical)?;
    let outside = spec.outside(&ess, cfg.params.eps.unwrap_or(1e-3));
    let result = json!({
        "n": n,
        "eigenvalues": spec.eigenvalues,
        "blocks": spec.blocks,
        "deflation_tol": spec.deflation_tol,
        "outside_essential": outside,
    });
    let mut csv = vec![
        ("section_bands.csv".to_string(), csv_string(|w| section.write_band_csv(w))?),
        ("section_eigenvalues.csv".to_string(), csv_string(|w| spec.write_csv(w))?),
    ];
    if n <= 512 {
        csv.push(("section_dense.csv".into(), csv_string(|w| section.write_dense_csv(w))?));
    }
    let mut plot = Plot::new(&format!("eigenvalues of the N = {n} section"), "Re λ", "Im λ");
    plot.series.push(interval_series(&ess));
    plot.series.push(scatter("section eigenvalues", spec.eigenvalues.iter().copied()));
    Ok(TaskOutput {
        result,
        heuristic: false,
        csv,
        plot,
    })
}

fn portrait_task(cfg: &JobConfig, model: &CoefficientModel, profile: &LimitProfile) -> Result<TaskOutput, JobError> {
    let schedule = cfg.params.schedule.clone().unwrap_or_else(|| vec![128, 256, 512, 1024]);
    let eps = cfg.params.eps.unwrap_or(1e-3);
    let ess = essential_spectrum(profile).map_err(numerical)?;
    let report = spectral_portrait(model, &schedule, &ess, eps).map_err(numerical)?;
    let mut csv = String::from("n,max_distance,fill_distance,outliers\n");
    for e in &report.entries {
        csv.push_str(&format!("{},{},{},{}\n", e.n, e.max_distance, e.fill_distance, e.outliers.len()));
    }
    let mut plot = Plot::new("section spectra against the essential spectrum", "N", "distance");
    plot.logscale_y = true;
    plot.series.push(Series::new(
        "fill distance",
        Style::Lines,
        report.entries.iter().map(|e| (e.n as f64, e.fill_distance)).collect(),
    ));
    plot.series.push(Series::new(
        "max distance",
        Style::Lines,
        report.entries.iter().map(|e| (e.n as f64, e.max_distance.max(f64::MIN_POSITIVE))).collect(),
    ));
    Ok(TaskOutput {
        result: to_value(&report),
        heuristic: false,
        csv: vec![("portrait.csv".into(), csv)],
        plot,
    })
}
