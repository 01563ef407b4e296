use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{IncrementModel, TailKind, TailModel};
use crate::error::{Error, Result};
use crate::perpetuity::TruncationRule;
use crate::stats::DEFAULT_ALPHA;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    VerifyTheorem1,
    VerifyTheorem2,
    VerifyTheorem3,
    ExpFunctional,
    LilPerpetuity,
    LilSuprema,
    LilBmFunctional,
    CrossValidateLimitLaws,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::VerifyTheorem1,
        Experiment::VerifyTheorem2,
        Experiment::VerifyTheorem3,
        Experiment::ExpFunctional,
        Experiment::LilPerpetuity,
        Experiment::LilSuprema,
        Experiment::LilBmFunctional,
        Experiment::CrossValidateLimitLaws,
    ];

    /// Snake-case name used in file names and JSON.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyTheorem1 => "verify_theorem1",
            Experiment::VerifyTheorem2 => "verify_theorem2",
            Experiment::VerifyTheorem3 => "verify_theorem3",
            Experiment::ExpFunctional => "exp_functional",
            Experiment::LilPerpetuity => "lil_perpetuity",
            Experiment::LilSuprema => "lil_suprema",
            Experiment::LilBmFunctional => "lil_bm_functional",
            Experiment::CrossValidateLimitLaws => "cross_validate_limit_laws",
        }
    }

    pub fn is_marginal(self) -> bool {
        matches!(
            self,
            Experiment::VerifyTheorem1 | Experiment::VerifyTheorem2 | Experiment::VerifyTheorem3
        )
    }

    pub fn is_lil(self) -> bool {
        matches!(
            self,
            Experiment::LilPerpetuity | Experiment::LilSuprema | Experiment::LilBmFunctional
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    /// Allowed increase of a KS statistic from one discount rate to the next smaller one.
    pub trend_tolerance: f64,
    /// Upper bound on the KS statistic of `log Y` at `max_ks_at`.
    pub max_ks: Option<f64>,
    /// Discount rate of the `max_ks` check; `None` is the smallest simulated one.
    pub max_ks_at: Option<f64>,
    /// Two-sample test of scaled `Z` against scaled `log Y` at the smallest discount rate.
    pub two_sample_at_smallest_a: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            trend_tolerance: 0.01,
            max_ks: None,
            max_ks_at: None,
            two_sample_at_smallest_a: false,
        }
    }
}

/// Monte Carlo reference distribution function for the mixed law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Reference {
    pub n_paths: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for Reference {
    fn default() -> Self {
        Reference {
            n_paths: 20_000,
            x_min: 0.01,
            x_max: 1000.0,
            points: 61,
        }
    }
}

impl Reference {
    /// Log-spaced evaluation grid.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.x_min.ln(), self.x_max.ln());
        (0..self.points)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LilSettings {
    /// Checkpoints `n` of the suprema trace.
    pub n_grid: Vec<u64>,
    /// Step of the Brownian path of the functional trace.
    pub h: f64,
    pub step_budget: u64,
}

impl Default for LilSettings {
    fn default() -> Self {
        LilSettings {
            n_grid: crate::stats::geometric_counts(1000, 10_000_000, 25),
            h: 1e-4,
            step_budget: 400_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossValidation {
    pub betas: Vec<f64>,
    /// Evaluation points of the mixed-law comparison.
    pub mixed_x: Vec<f64>,
    pub mixed_tolerance: f64,
    /// Bound on the two-sample distance between the exponential functional and its gamma oracle.
    pub exp_functional_tolerance: f64,
    /// Step of the exponential functional sampler.
    pub h: f64,
    /// Sample size of the exponential functional comparison.
    pub n_exp_functional: usize,
}

impl Default for CrossValidation {
    fn default() -> Self {
        CrossValidation {
            betas: vec![1.2, 1.5, 1.8, 2.0],
            mixed_x: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            mixed_tolerance: 0.03,
            exp_functional_tolerance: 0.05,
            h: 1e-3,
            n_exp_functional: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub increment: IncrementModel,
    pub tail: TailModel,
    #[serde(default)]
    pub a_grid: Vec<f64>,
    #[serde(default)]
    pub u_grid: Vec<f64>,
    pub n_replicates: usize,
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Worker threads; `None` uses every available core.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Write the measured wall time into `summary.json` (otherwise 0, keeping output bytes reproducible).
    #[serde(default)]
    pub record_runtime: bool,
    #[serde(default)]
    pub truncation: TruncationRule,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub lil: LilSettings,
    #[serde(default)]
    pub cross_validation: CrossValidation,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl ExperimentConfig {
    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring where and how fast it runs.
    pub fn digest(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        canon.threads = None;
        canon.record_runtime = false;
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Check ranges and the hypotheses of the configured experiment.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", self.alpha, "must lie in (0, 1)"));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads", 0.0, "must be >= 1"));
        }
        self.truncation.validate()?;
        let needs_grid = !self.experiment.is_lil() || self.experiment == Experiment::LilPerpetuity;
        let needs_grid = needs_grid
            && !matches!(self.experiment, Experiment::CrossValidateLimitLaws);
        if needs_grid && self.a_grid.is_empty() {
            return Err(Error::Empty { what: "a_grid" });
        }
        for &a in &self.a_grid {
            if !(a.is_finite() && a > 0.0 && a <= 1.0) {
                return Err(Error::param("a", a, "must lie in (0, 1]"));
            }
        }
        if self.a_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("a_grid must be strictly decreasing".into()));
        }
        if self.experiment.is_marginal() {
            if self.u_grid.is_empty() {
                return Err(Error::Empty { what: "u_grid" });
            }
            if self.u_grid.windows(2).any(|w| w[1] <= w[0]) || self.u_grid.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
                return Err(Error::Config("u_grid must be positive and strictly increasing".into()));
            }
        }
        if !self.experiment.is_lil() && self.n_replicates < 2 {
            return Err(Error::param("n_replicates", self.n_replicates as f64, "must be >= 2"));
        }
        if self.n_replicates > u32::MAX as usize {
            return Err(Error::param("n_replicates", self.n_replicates as f64, "must fit in 32 bits"));
        }
        if self.checks.trend_tolerance.is_nan() || self.checks.trend_tolerance < 0.0 {
            return Err(Error::param("trend_tolerance", self.checks.trend_tolerance, "must be >= 0"));
        }
        let r = &self.reference;
        if !(r.x_min > 0.0 && r.x_max > r.x_min && r.points >= 2 && r.n_paths >= 2) {
            return Err(Error::Config("reference needs 0 < x_min < x_max, points >= 2, n_paths >= 2".into()));
        }
        self.check_hypotheses()
    }

    fn check_hypotheses(&self) -> Result<()> {
        let kind = self.tail.kind();
        match self.experiment {
            Experiment::VerifyTheorem1 => match kind {
                TailKind::LightExp { .. } | TailKind::Zero => Ok(()),
                _ => Err(Error::Hypothesis {
                    hypothesis: "Theorem 1: t^2 P{log eta > t} -> 0",
                    detail: format!("{} does not satisfy it; use light_exp", tail_name(kind)),
                }),
            },
            Experiment::VerifyTheorem2 => match *kind {
                TailKind::ParetoRv { beta, .. } if beta > 1.0 && beta < 2.0 => Ok(()),
                _ => Err(Error::Hypothesis {
                    hypothesis: "Theorem 2: P{log eta > t} regularly varying of index -beta, beta in (1, 2)",
                    detail: format!(
                        "{} does not satisfy it; use pareto_rv with 1 < beta < 2 (beta = 2 belongs to quadratic_tail and Theorem 3)",
                        tail_name(kind)
                    ),
                }),
            },
            Experiment::VerifyTheorem3 => match kind {
                TailKind::QuadraticTail { .. } => Ok(()),
                _ => Err(Error::Hypothesis {
                    hypothesis: "Theorem 3: t^2 P{log eta > t} -> lambda in (0, inf)",
                    detail: format!("{} does not satisfy it; use quadratic_tail", tail_name(kind)),
                }),
            },
            Experiment::LilPerpetuity | Experiment::LilSuprema => {
                if self.tail.has_lil_moment() {
                    Ok(())
                } else {
                    Err(Error::Hypothesis {
                        hypothesis: "law of the iterated logarithm: E f(log+ eta) < inf with f(x) = x^2 / log log x",
                        detail: format!("{} has too heavy a tail; use light_exp", tail_name(kind)),
                    })
                }
            }
            Experiment::ExpFunctional | Experiment::LilBmFunctional | Experiment::CrossValidateLimitLaws => Ok(()),
        }
    }
}

fn tail_name(kind: &TailKind) -> &'static str {
    match kind {
        TailKind::LightExp { .. } => "light_exp",
        TailKind::ParetoRv { .. } => "pareto_rv",
        TailKind::QuadraticTail { .. } => "quadratic_tail",
        TailKind::Zero => "zero",
    }
}
