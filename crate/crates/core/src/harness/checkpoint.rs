//! Versioned JSON checkpoints: model state plus everything needed to
//! re-derive its inputs (feature layout, split, seed, data hash).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoencoder::Autoencoder;
use crate::dataio::{FeatureSpec, Features, SplitSpec};
use crate::error::{Error, Result};
use crate::linear_conjoint::{effects_code, PartworthTable};
use crate::numcore::{sigmoid, Matrix};
use crate::residual_net::{Pairing, ResidualNet};
use crate::schema::AttributeSchema;
use crate::ssl_net::SslNet;

pub const CHECKPOINT_FORMAT: &str = "conjointnet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Logit model on either utility differences (pairwise) or the
/// concatenated options with an intercept (single vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub pairing: Pairing,
    pub weights: Vec<f64>,
    pub intercept: Option<f64>,
}

impl LinearModel {
    /// The design matrix this model scores.
    pub fn design(pairing: Pairing, data: &Features) -> Result<Matrix> {
        match pairing {
            Pairing::Pairwise => {
                if data.options.len() != 2 {
                    return Err(Error::Validation(format!(
                        "pairwise conjoint needs two options, dataset has {}",
                        data.options.len()
                    )));
                }
                data.options[0].zip_map(&data.options[1], |a, b| a - b)
            }
            Pairing::SingleVector => data.concat(),
        }
    }

    pub fn logits(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.weights.len() {
            return Err(Error::Shape(format!(
                "input width {} does not match model width {}",
                x.cols(),
                self.weights.len()
            )));
        }
        let b = self.intercept.unwrap_or(0.0);
        Ok((0..x.rows())
            .map(|r| b + x.row(r).iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
            .collect())
    }

    pub fn scores(&self, data: &Features) -> Result<Vec<f64>> {
        let x = Self::design(self.pairing, data)?;
        Ok(self.logits(&x)?.into_iter().map(sigmoid).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", content = "state", rename_all = "snake_case")]
pub enum ModelState {
    Conjoint(LinearModel),
    Ssl(SslNet),
    Residual(ResidualNet),
    Autoencoder(Autoencoder),
}

impl ModelState {
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelState::Conjoint(_) => "Conjoint",
            ModelState::Ssl(_) => "SSL ConjointNet",
            ModelState::Residual(_) => "Residual ConjointNet",
            ModelState::Autoencoder(_) => "Autoencoder",
        }
    }

    /// Choice probabilities; autoencoders do not score choices.
    pub fn scores(&self, data: &Features) -> Result<Vec<f64>> {
        match self {
            ModelState::Conjoint(m) => m.scores(data),
            ModelState::Ssl(m) => m.predict_scores(&data.options),
            ModelState::Residual(m) => m.predict_scores(data),
            ModelState::Autoencoder(_) => {
                Err(Error::Validation("an autoencoder checkpoint does not predict choices".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelState,
    /// Dataset the model was trained on, as given in the config.
    pub dataset: PathBuf,
    pub dataset_sha256: String,
    pub features: FeatureSpec,
    pub split: SplitSpec,
    pub seed: u64,
    pub best_epoch: usize,
    /// Layout of one option's columns (absent for numeric inputs).
    pub option_schema: Option<AttributeSchema>,
    /// Layout of all options side by side.
    pub concat_schema: Option<AttributeSchema>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let probe: serde_json::Value = serde_json::from_str(&text)?;
        let format = probe.get("format").and_then(|v| v.as_str()).unwrap_or_default();
        if format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!("{} is not a checkpoint (format '{format}')", path.display())));
        }
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != u64::from(CHECKPOINT_VERSION) {
            return Err(Error::Data(format!(
                "{}: checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})",
                path.display()
            )));
        }
        Ok(serde_json::from_value(probe)?)
    }

    /// Effects-coded linear partworths of a conjoint or residual model.
    pub fn partworths(&self) -> Result<PartworthTable> {
        let need = |s: &Option<AttributeSchema>| {
            s.clone().ok_or_else(|| {
                Error::Validation("partworths need categorical (one-hot) inputs; this model was trained on numeric features".into())
            })
        };
        match &self.model {
            ModelState::Conjoint(m) => {
                let schema = match m.pairing {
                    Pairing::Pairwise => need(&self.option_schema)?,
                    Pairing::SingleVector => need(&self.concat_schema)?,
                };
                Ok(effects_code(&PartworthTable::from_flat(schema, &m.weights)?))
            }
            ModelState::Residual(m) => {
                let schema = match m.config.pairing {
                    Pairing::Pairwise => need(&self.option_schema)?,
                    Pairing::SingleVector => need(&self.concat_schema)?,
                };
                m.extract_linear_partworths(&schema)
            }
            other => Err(Error::Validation(format!(
                "{} checkpoints have no linear partworths",
                other.display_name()
            ))),
        }
    }
}
