//! TOML run configuration.
//!
//! Seeds not given explicitly are derived from the top-level `seed`, so a
//! single `--seed` override reseeds the whole run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{EndpointMode, GeneratorSpec};
use crate::error::{Error, Result};
use crate::eval::CutoffMode;
use crate::models::{Algorithm, EstimatorSpec, HyperPoint, Metric, TrainControl};
use crate::preprocess::{BalanceStrategy, RecipeConfig};
use crate::resample::ResamplingPlan;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; absent means one per core. Never affects results.
    pub threads: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub data: DataSource,
    pub endpoint: EndpointConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default = "RecipeConfig::standard")]
    pub recipe: RecipeConfig,
    pub train: TrainConfig,
    pub rfe: Option<RfeConfig>,
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub cutoff: CutoffPolicy,
}

fn default_out() -> PathBuf {
    PathBuf::from("clinpred-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub input: Option<PathBuf>,
    pub generate: Option<GenerateRequest>,
    /// CSV columns to treat as categorical (levels taken from the data).
    #[serde(default)]
    pub categorical: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    pub n: usize,
    pub seed: Option<u64>,
    pub spec: Option<GeneratorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub name: String,
    pub mode: EndpointMode,
    #[serde(default)]
    pub ignore: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    pub seed: Option<u64>,
}

fn default_fraction() -> f64 {
    0.8
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { fraction: default_fraction(), seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub plan: ResamplingPlan,
    pub metric: Option<Metric>,
    #[serde(default)]
    pub balance: BalanceStrategy,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    List(Vec<usize>),
    Range { from: usize, to: usize },
}

impl SizeSpec {
    pub fn expand(&self) -> Vec<usize> {
        match self {
            SizeSpec::List(v) => v.clone(),
            SizeSpec::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfeConfig {
    #[serde(default = "enabled")]
    pub enabled: bool,
    pub estimator: String,
    #[serde(default)]
    pub grid: Vec<HyperPoint>,
    pub sizes: SizeSpec,
    pub plan: ResamplingPlan,
    pub seed: Option<u64>,
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub key: String,
    /// Empty means the default grid.
    #[serde(default)]
    pub grid: Vec<HyperPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum CutoffPolicy {
    Fixed {
        value: f64,
    },
    #[default]
    Balanced,
    RuleIn {
        target: f64,
    },
    RuleOut {
        target: f64,
    },
}

impl CutoffPolicy {
    /// Search mode for data-driven policies; `None` for a fixed cutoff.
    pub fn search_mode(self) -> Option<CutoffMode> {
        match self {
            CutoffPolicy::Fixed { .. } => None,
            CutoffPolicy::Balanced => Some(CutoffMode::Balanced),
            CutoffPolicy::RuleIn { target } => Some(CutoffMode::RuleIn { target }),
            CutoffPolicy::RuleOut { target } => Some(CutoffMode::RuleOut { target }),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative input paths are relative to the config file.
        if let (Some(input), Some(dir)) = (cfg.data.input.as_mut(), path.parent()) {
            if input.is_relative() {
                *input = dir.join(&*input);
            }
        }
        Ok(cfg)
    }

    pub fn metric(&self) -> Metric {
        self.train.metric.unwrap_or_else(|| Metric::for_mode(self.endpoint.mode))
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or_else(|| derive_seed(self.seed, 1))
    }

    pub fn train_seed(&self) -> u64 {
        self.train.seed.unwrap_or_else(|| derive_seed(self.seed, 2))
    }

    pub fn rfe_seed(&self) -> u64 {
        self.rfe.as_ref().and_then(|r| r.seed).unwrap_or_else(|| derive_seed(self.seed, 3))
    }

    pub fn generator_seed(&self) -> u64 {
        self.data.generate.as_ref().and_then(|g| g.seed).unwrap_or_else(|| derive_seed(self.seed, 4))
    }

    pub fn train_control(&self) -> TrainControl {
        TrainControl {
            plan: self.train.plan,
            metric: self.metric(),
            balance: self.train.balance.clone(),
            recipe: RecipeConfig { balance: BalanceStrategy::None, ..self.recipe.clone() },
            seed: self.train_seed(),
        }
    }

    pub fn estimators(&self) -> Result<Vec<EstimatorSpec>> {
        self.models
            .iter()
            .map(|m| Ok(EstimatorSpec::new(Algorithm::from_key(&m.key, self.endpoint.mode)?, m.grid.clone())))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.endpoint.mode;
        match (&self.data.input, &self.data.generate) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(Error::Config("data needs exactly one of `input` or `generate`".into())),
        }
        if !(self.split.fraction > 0.0 && self.split.fraction < 1.0) {
            return Err(Error::Config(format!("split fraction must be in (0,1), got {}", self.split.fraction)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        self.train_control().validate(mode)?;
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        let mut seen = Vec::new();
        for spec in self.estimators()? {
            if seen.contains(&spec.algorithm) {
                return Err(Error::Config(format!("model {} listed twice", spec.algorithm.key())));
            }
            seen.push(spec.algorithm);
            for point in &spec.grid {
                point.validate(spec.algorithm, usize::MAX)?;
            }
        }
        if let Some(rfe) = &self.rfe {
            Algorithm::from_key(&rfe.estimator, mode)?;
            rfe.plan.validate()?;
        }
        match self.cutoff {
            CutoffPolicy::Fixed { value } if !(value > 0.0 && value < 1.0) => {
                Err(Error::Config(format!("fixed cutoff must be in (0,1), got {value}")))
            }
            CutoffPolicy::RuleIn { target } | CutoffPolicy::RuleOut { target } if !(target > 0.0 && target <= 1.0) => {
                Err(Error::Config(format!("cutoff target must be in (0,1], got {target}")))
            }
            _ => Ok(()),
        }
    }
}
