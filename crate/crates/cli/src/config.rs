//! Job configuration read from a TOML file.

use std::path::PathBuf;

use pentaspec::eigensolve::{Rect, SearchOptions};
use pentaspec::{BandSpec, CoefficientModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NormBounds,
    EssentialSpectrum,
    FineSpectrum,
    Eigenvalues,
    CheckConditions,
    Truncate,
    Portrait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: BandSpec,
    pub b: BandSpec,
    pub c: BandSpec,
}

impl ModelConfig {
    pub fn build(&self) -> CoefficientModel {
        CoefficientModel::from_bands(self.a.clone(), self.b.clone(), self.c.clone())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Task parameters; every field is optional and defaults to the library value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// `[re_lo, re_hi, im_lo, im_hi]`.
    pub region: Option<[f64; 4]>,
    pub grid: Option<usize>,
    pub depth: Option<usize>,
    pub collar: Option<f64>,
    pub residual_tol: Option<f64>,
    pub match_tol: Option<f64>,
    pub multiplicity_block: Option<usize>,
    /// Spectral parameters for check-conditions.
    pub lambdas: Option<Vec<f64>>,
    pub lambda_grid: Option<LambdaGrid>,
    pub threshold: Option<f64>,
    pub n_max: Option<usize>,
    /// Section size for truncate.
    pub n: Option<usize>,
    /// Section sizes for portrait.
    pub schedule: Option<Vec<usize>>,
    pub eps: Option<f64>,
    pub samples: Option<usize>,
    pub sample_len: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct JobConfig {
    pub task: Task,
    pub model: ModelConfig,
    /// Space order of `l_p`.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub acknowledge_hypothesis: bool,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

fn positive(name: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::Invalid(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: JobConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(ConfigError::Invalid(format!("p must be a finite number >= 1, got {}", self.p)));
        }
        for (name, v) in [
            ("collar", p.collar),
            ("residual-tol", p.residual_tol),
            ("match-tol", p.match_tol),
            ("threshold", p.threshold),
            ("eps", p.eps),
        ] {
            positive(name, v)?;
        }
        if let Some(r) = p.region {
            if !(r.iter().all(|v| v.is_finite()) && r[0] < r[1] && r[2] < r[3]) {
                return Err(ConfigError::Invalid(format!("region {r:?} is not a rectangle [re_lo, re_hi, im_lo, im_hi]")));
            }
        }
        if let Some(g) = p.lambda_grid {
            if !(g.lo <= g.hi && g.count >= 1) {
                return Err(ConfigError::Invalid("lambda-grid needs lo <= hi and count >= 1".into()));
            }
        }
        if let Some(s) = &p.schedule {
            if s.is_empty() || s.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::Invalid("schedule must be non-empty and increasing".into()));
            }
        }
        for (name, v) in [("grid", p.grid), ("n", p.n), ("n-max", p.n_max), ("samples", p.samples)] {
            if v == Some(0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> CoefficientModel {
        self.model.build()
    }

    pub fn search_options(&self) -> SearchOptions {
        let d = SearchOptions::default();
        let p = &self.params;
        SearchOptions {
            collar: p.collar.unwrap_or(d.collar),
            grid: p.grid.unwrap_or(d.grid),
            depth: p.depth.unwrap_or(d.depth),
            residual_tol: p.residual_tol.unwrap_or(d.residual_tol),
            match_tol: p.match_tol.unwrap_or(d.match_tol),
            multiplicity_block: p.multiplicity_block.unwrap_or(d.multiplicity_block),
            acknowledge_hypothesis: self.acknowledge_hypothesis,
            ..d
        }
    }

    pub fn region(&self) -> Option<Rect> {
        self.params.region.map(|r| Rect {
            re_lo: r[0],
            re_hi: r[1],
            im_lo: r[2],
            im_hi: r[3],
        })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let mut out = self.params.lambdas.clone().unwrap_or_default();
        if let Some(g) = self.params.lambda_grid {
            if g.count == 1 {
                out.push(g.lo);
            } else {
                out.extend((0..g.count).map(|k| g.lo + (g.hi - g.lo) * k as f64 / (g.count - 1) as f64));
            }
        }
        out
    }
}
