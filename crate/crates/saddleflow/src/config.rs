//! Experiment configuration read from JSON.
//!
//! ```json
//! {
//!   "penalty": {"kind": "norm", "q": 1, "r_lambda": 1.0, "asymmetric": false},
//!   "generator": {"distribution": "gaussian", "m": 25, "d": 10, "T": 200, "requests": 1, "seed": 0},
//!   "algorithm": "alg1",
//!   "repeats": 10
//! }
//! ```
//!
//! Exactly one of `generator` and `dataset` must be present.

use std::path::{Path, PathBuf};

use saddleflow_core::data::{Distribution, GeneratorConfig};
use saddleflow_core::oracle::SimplexBlocks;
use saddleflow_core::penalty::{NormKind, PenaltyKind, PenaltySpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    Norm,
    Huber,
}

/// `q` as written in the config: `1`, `2` or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormIndex {
    Finite(u32),
    Named(String),
}

impl NormIndex {
    fn to_kind(&self) -> Result<NormKind> {
        match self {
            Self::Finite(1) => Ok(NormKind::L1),
            Self::Finite(2) => Ok(NormKind::L2),
            Self::Named(s) if s == "inf" => Ok(NormKind::Linf),
            other => Err(CliError::Config(format!(
                "q must be 1, 2 or \"inf\", got {other:?}"
            ))),
        }
    }

    fn from_kind(kind: NormKind) -> Self {
        match kind {
            NormKind::L1 => Self::Finite(1),
            NormKind::L2 => Self::Finite(2),
            NormKind::Linf => Self::Named("inf".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub kind: PenaltyFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<NormIndex>,
    pub r_lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default)]
    pub asymmetric: bool,
}

impl PenaltyConfig {
    pub fn to_spec(&self) -> Result<PenaltySpec> {
        let kind = match self.kind {
            PenaltyFamily::Norm => {
                if self.l.is_some() {
                    return Err(CliError::Config("\"l\" only applies to huber penalties".into()));
                }
                let q = self
                    .q
                    .as_ref()
                    .ok_or_else(|| CliError::Config("norm penalty needs \"q\"".into()))?;
                PenaltyKind::ScaledNorm(q.to_kind()?)
            }
            PenaltyFamily::Huber => {
                if let Some(q) = &self.q {
                    if q.to_kind()? != NormKind::L2 {
                        return Err(CliError::Config(
                            "only the Euclidean huber penalty (q = 2) is available".into(),
                        ));
                    }
                }
                let smoothness = self
                    .l
                    .ok_or_else(|| CliError::Config("huber penalty needs \"l\"".into()))?;
                PenaltyKind::HuberL2 { smoothness }
            }
        };
        Ok(PenaltySpec::new(kind, self.r_lambda, self.asymmetric)?)
    }

    pub fn from_spec(spec: &PenaltySpec) -> Self {
        match spec.kind() {
            PenaltyKind::ScaledNorm(q) => Self {
                kind: PenaltyFamily::Norm,
                q: Some(NormIndex::from_kind(q)),
                r_lambda: spec.r_lambda(),
                l: None,
                asymmetric: spec.is_asymmetric(),
            },
            PenaltyKind::HuberL2 { smoothness } => Self {
                kind: PenaltyFamily::Huber,
                q: None,
                r_lambda: spec.r_lambda(),
                l: Some(smoothness),
                asymmetric: spec.is_asymmetric(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: usize,
    /// Requests per round; each request is one simplex block of width `d`.
    #[serde(default = "default_requests")]
    pub requests: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_distribution() -> String {
    "gaussian".into()
}
fn default_m() -> usize {
    25
}
fn default_d() -> usize {
    10
}
fn default_horizon() -> usize {
    200
}
fn default_requests() -> usize {
    1
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            distribution: default_distribution(),
            m: default_m(),
            d: default_d(),
            horizon: default_horizon(),
            requests: default_requests(),
            seed: 0,
        }
    }
}

impl GeneratorSection {
    pub fn to_config(&self, horizon: usize, seed: u64) -> Result<GeneratorConfig> {
        let distribution: Distribution = self
            .distribution
            .parse()
            .map_err(|e: saddleflow_core::Error| CliError::Config(e.to_string()))?;
        if self.m == 0 || self.d == 0 || self.requests == 0 || horizon == 0 {
            return Err(CliError::Config(
                "generator m, d, T and requests must be positive".into(),
            ));
        }
        Ok(GeneratorConfig {
            distribution,
            m: self.m,
            blocks: SimplexBlocks::uniform(self.requests, self.d)?,
            horizon,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Saddle-point method with the true matrices.
    #[default]
    Alg1,
    /// Saddle-point method with online matrix estimates.
    Alg2,
    /// Per-round additive relaxation.
    Additive,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alg1 => "alg1",
            Self::Alg2 => "alg2",
            Self::Additive => "additive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualModeOverride {
    Convex,
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixInit {
    /// Start the estimate at the zero matrix.
    #[default]
    Zero,
    /// Start the estimate at the first round's matrix.
    First,
}

/// Optional replacements for the constants derived from the dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOverrides {
    #[serde(default)]
    pub dual_mode: Option<DualModeOverride>,
    #[serde(default)]
    pub g_bound: Option<f64>,
    /// Euclidean radius of the dual domain used in the step sizes.
    #[serde(default)]
    pub r_lambda: Option<f64>,
    #[serde(default)]
    pub matrix_radius: Option<f64>,
    #[serde(default)]
    pub a_init: MatrixInit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineSettings {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_iters() -> usize {
    20_000
}
fn default_tol() -> f64 {
    1e-3
}

impl Default for OfflineSettings {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSettings {
    #[serde(default = "default_inner_iters")]
    pub inner_iters: usize,
    /// Fixed inner step scale; derived per round when absent.
    #[serde(default)]
    pub step_scale: Option<f64>,
}

fn default_inner_iters() -> usize {
    saddleflow_core::online::BASELINE_INNER_ITERS
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            inner_iters: default_inner_iters(),
            step_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub generator: Option<GeneratorSection>,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub schedule: ScheduleOverrides,
    /// Exponents `γ` of the dual radius `R_λ = 2^γ`.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
    #[serde(default)]
    pub repeats: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub offline: OfflineSettings,
    #[serde(default)]
    pub baseline: BaselineSettings,
}

/// `γ ∈ {−8, −7.5, …, 10}`.
pub fn default_sweep() -> Vec<f64> {
    (0..37).map(|k| -8.0 + 0.5 * k as f64).collect()
}

pub const DEFAULT_HORIZONS: [usize; 5] = [100, 200, 500, 1000, 2000];
pub const DEFAULT_TRADEOFF_REPEATS: usize = 10;
pub const DEFAULT_REGRET_REPEATS: usize = 20;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.generator, &self.dataset) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either \"generator\" or \"dataset\", not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "missing dataset: give \"generator\" or \"dataset\"".into(),
                ))
            }
            _ => {}
        }
        if self.repeats == Some(0) {
            return Err(CliError::Config("repeats must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() || sweep.iter().any(|g| !g.is_finite()) {
                return Err(CliError::Config("sweep must be a non-empty list of finite exponents".into()));
            }
        }
        if let Some(horizons) = &self.horizons {
            if horizons.is_empty() || horizons.contains(&0) {
                return Err(CliError::Config("horizons must be a non-empty list of positive integers".into()));
            }
        }
        self.penalty.to_spec()?;
        Ok(())
    }

    pub fn penalty_spec(&self) -> Result<PenaltySpec> {
        self.penalty.to_spec()
    }

    pub fn sweep_or_default(&self) -> Vec<f64> {
        self.sweep.clone().unwrap_or_else(default_sweep)
    }

    pub fn horizons_or_default(&self) -> Vec<usize> {
        self.horizons.clone().unwrap_or_else(|| DEFAULT_HORIZONS.to_vec())
    }

    /// The generator section, required by the sweep commands.
    pub fn generator_section(&self) -> Result<&GeneratorSection> {
        self.generator
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a \"generator\" section".into()))
    }

    /// Overrides the generator seed, if any.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let (Some(seed), Some(g)) = (seed, self.generator.as_mut()) {
            g.seed = seed;
        }
        self
    }
}
