//! Experiment configuration files and `key.path=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::autoencoder::{AeConfig, AeTrainConfig};
use crate::dataio::{FeatureSpec, SplitSpec};
use crate::error::{Error, Result};
use crate::numcore::OptimizerKind;
use crate::residual_net::{Pairing, ResidualConfig};
use crate::ssl_net::SslConfig;
use crate::train::{ClassifierTrainConfig, MAX_EPOCHS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Conjoint {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_newton_iter")]
        max_iter: usize,
        /// Defaults to the dataset's task.
        #[serde(default)]
        pairing: Option<Pairing>,
    },
    Ssl {
        /// Autoencoder checkpoint produced by `pretrain-ae`.
        encoder: PathBuf,
        #[serde(flatten)]
        config: SslConfig,
    },
    Residual {
        #[serde(flatten)]
        config: ResidualConfig,
    },
}

fn default_lambda() -> f64 {
    1e-4
}

fn default_newton_iter() -> usize {
    100
}

impl ModelSpec {
    /// Row label used in comparison tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelSpec::Conjoint { .. } => "Conjoint",
            ModelSpec::Ssl { .. } => "SSL ConjointNet",
            ModelSpec::Residual { .. } => "Residual ConjointNet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub features: FeatureSpec,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_max_epochs() -> usize {
    MAX_EPOCHS
}

fn default_batch_size() -> usize {
    64
}

fn default_learning_rate() -> f64 {
    1e-3
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.max_epochs > MAX_EPOCHS {
            return Err(Error::Validation(format!(
                "max_epochs must be in 1..={MAX_EPOCHS}, got {}",
                self.max_epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if let ModelSpec::Conjoint { lambda, .. } = &self.model {
            if !(*lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Validation(format!("lambda must be >= 0, got {lambda}")));
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> ClassifierTrainConfig {
        ClassifierTrainConfig {
            epochs: self.max_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            seed: self.seed,
        }
    }
}

/// Autoencoder pretraining run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    /// `input_dim` is taken from the dataset when left at 0.
    #[serde(default)]
    pub autoencoder: AeConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Fraction of the training items held out for checkpoint selection.
    #[serde(default = "default_ae_val")]
    pub val_fraction: f64,
    #[serde(default)]
    pub split: SplitSpec,
}

fn default_ae_val() -> f64 {
    0.1
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.max_epochs > MAX_EPOCHS {
            return Err(Error::Validation(format!(
                "max_epochs must be in 1..={MAX_EPOCHS}, got {}",
                self.max_epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }

    pub fn train_config(&self) -> AeTrainConfig {
        AeTrainConfig {
            epochs: self.max_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            val_fraction: self.val_fraction,
            seed: self.seed,
        }
    }
}

/// Parses an override value as JSON, falling back to a plain string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `a.b.c` inside a JSON object, creating intermediate objects.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Validation(format!("bad override key '{key}'")));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Validation(format!("override '{key}': '{}' is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parse_value(raw));
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses `key=value` pairs and applies them in order.
pub fn apply_overrides(root: &mut Value, pairs: &[String]) -> Result<()> {
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("override '{p}' is not key=value")))?;
        apply_override(root, k.trim(), v.trim())?;
    }
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

/// Deserializes a config after overrides; schema errors are validation errors.
pub fn from_value<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Validation(format!("config: {e}")))
}
