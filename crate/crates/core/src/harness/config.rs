use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::{Method, OptimizerParams};
use crate::projection::ProjectionKind;
use crate::surrogate::DEFAULT_LAMBDA;

/// JSON experiment description. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Embeddings TSV; relative paths resolve against the config file's directory.
    pub dataset: PathBuf,
    #[serde(default = "default_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_dims")]
    pub latent_dims: Vec<usize>,
    #[serde(default = "default_projection")]
    pub projection: ProjectionKind,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub optimizer: OptimizerParams,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_sizes() -> Vec<usize> {
    vec![1000, 2000, 5000, 10000]
}

fn default_dims() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

fn default_projection() -> ProjectionKind {
    ProjectionKind::Pca
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_methods() -> Vec<Method> {
    vec![Method::Sa, Method::Ga, Method::Greedy, Method::Random, Method::Bo]
}

fn default_seeds() -> usize {
    5
}

impl ExperimentConfig {
    /// Config with every default and the given dataset.
    pub fn with_dataset(dataset: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            sample_sizes: default_sizes(),
            latent_dims: default_dims(),
            projection: default_projection(),
            train_fraction: default_train_fraction(),
            lambda: default_lambda(),
            optimizer: OptimizerParams::default(),
            methods: default_methods(),
            master_seed: 0,
            seeds: default_seeds(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves a relative dataset path against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.dataset.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.dataset = parent.join(&cfg.dataset);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.methods.is_empty() {
            return fail("methods must be nonempty");
        }
        if self.seeds == 0 {
            return fail("seeds must be at least 1");
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return fail("sample_sizes must be nonempty and positive");
        }
        if self.latent_dims.is_empty() || self.latent_dims.contains(&0) {
            return fail("latent_dims must be nonempty and positive");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail("train_fraction must lie in (0, 1)");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be positive");
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))
    }
}
