//! `H(x) = U(x) + f(x)`: a linear partworth path plus a one-hidden-layer ReLU
//! correction, trained jointly.
//!
//! Pairwise mode scores each option with the same `H` and links choices
//! through `σ(H(x_A) - H(x_B))`. Single-vector mode scores the concatenated
//! options as one input with `σ(H(x))`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::Features;
use crate::error::{Error, Result};
use crate::linear_conjoint::{effects_code, fit_design, FitConfig, PartworthTable};
use crate::numcore::layers::Dense;
use crate::numcore::{bce_with_logits, sigmoid, HasParams, Layer, LayerSpec, Matrix, Mode, Network, Parameter, Rng};
use crate::schema::AttributeSchema;
use crate::train::{fit_classifier, BinaryClassifier, ClassifierTrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    #[default]
    Pairwise,
    SingleVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResidualConfig {
    pub hidden_nodes: usize,
    pub pairing: Pairing,
    /// Scale of the initial f-path output weights relative to Glorot; 0
    /// starts from the pure linear model.
    pub residual_scale: f64,
    /// L2 weight on the linear partworths.
    pub lambda_linear: f64,
    /// L2 weight on the f-path weights.
    pub lambda_residual: f64,
    /// With `false` the f-path is pinned at zero.
    pub residual_enabled: bool,
    /// Initialize the linear path with the penalized-logit fit on the
    /// training data before joint training.
    pub warm_start_linear: bool,
    /// Learning-rate multiplier for the f-path.
    pub residual_lr_scale: f64,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            hidden_nodes: 16,
            pairing: Pairing::Pairwise,
            residual_scale: 0.0,
            lambda_linear: 1e-4,
            lambda_residual: 1e-4,
            residual_enabled: true,
            warm_start_linear: true,
            residual_lr_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityDecomposition {
    pub total: f64,
    pub linear: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualNet {
    pub config: ResidualConfig,
    pub input_dim: usize,
    /// `(input_dim, 1)` partworths, no bias.
    pub linear: Network,
    /// Used in single-vector mode only; pinned at 0 for pairwise data.
    pub intercept: Parameter,
    /// `Dense(d, h) -> ReLU -> Dense(h, 1)` without output bias.
    pub residual: Network,
}

impl ResidualNet {
    pub fn new(config: ResidualConfig, input_dim: usize, rng: &mut Rng) -> Result<Self> {
        if config.hidden_nodes == 0 {
            return Err(Error::Validation("hidden_nodes must be at least 1".into()));
        }
        if input_dim == 0 {
            return Err(Error::Validation("input width must be positive".into()));
        }
        if config.lambda_linear < 0.0 || config.lambda_residual < 0.0 {
            return Err(Error::Validation("L2 weights must be non-negative".into()));
        }
        let h = config.hidden_nodes;
        let linear = Network::from_layers(vec![Layer::Dense(Dense::new(input_dim, 1, false, rng))])?;
        let mut out = Dense::new(h, 1, false, rng);
        out.weight.value.scale(if config.residual_enabled { config.residual_scale } else { 0.0 });
        let residual = Network::from_layers(vec![
            Layer::Dense(Dense::new(input_dim, h, true, rng)),
            Layer::from_spec(&LayerSpec::relu(h), rng)?,
            Layer::Dense(out),
        ])?;
        let mut intercept = Parameter::new("intercept", Matrix::zeros(1, 1));
        intercept.frozen = config.pairing == Pairing::Pairwise;
        let mut m = Self { config, input_dim, linear, intercept, residual };
        m.residual.set_lr_scale(m.config.residual_lr_scale);
        if !m.config.residual_enabled {
            m.residual.set_frozen(true);
        }
        Ok(m)
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::LayerShape { layer: 0, expected: self.input_dim, got: x.cols() });
        }
        Ok(())
    }

    /// `(U, f)` columns for a batch of inputs, inference mode.
    fn paths(&self, x: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_width(x)?;
        let b = self.intercept.value.get(0, 0);
        let u: Vec<f64> = self.linear.infer(x)?.into_vec().into_iter().map(|v| v + b).collect();
        let f = if self.config.residual_enabled {
            self.residual.infer(x)?.into_vec()
        } else {
            vec![0.0; x.rows()]
        };
        Ok((u, f))
    }

    pub fn forward_decomposed(&self, x: &Matrix) -> Result<Vec<UtilityDecomposition>> {
        let (u, f) = self.paths(x)?;
        Ok(u.into_iter()
            .zip(f)
            .map(|(linear, residual)| UtilityDecomposition { total: linear + residual, linear, residual })
            .collect())
    }

    /// Model input rows for a featurized batch: each option as its own row
    /// block (pairwise) or all options side by side (single-vector).
    pub fn inputs(&self, data: &Features) -> Result<Matrix> {
        match self.config.pairing {
            Pairing::Pairwise => {
                if data.options.len() != 2 {
                    return Err(Error::Validation(format!(
                        "pairwise scoring needs two options, got {}",
                        data.options.len()
                    )));
                }
                Matrix::vcat(&[&data.options[0], &data.options[1]])
            }
            Pairing::SingleVector => data.concat(),
        }
    }

    fn logits_from_h(&self, h: &[f64], rows: usize) -> Vec<f64> {
        match self.config.pairing {
            Pairing::Pairwise => (0..rows).map(|i| h[i] - h[rows + i]).collect(),
            Pairing::SingleVector => h.to_vec(),
        }
    }

    pub fn predict_scores(&self, data: &Features) -> Result<Vec<f64>> {
        let x = self.inputs(data)?;
        let (u, f) = self.paths(&x)?;
        let h: Vec<f64> = u.iter().zip(&f).map(|(a, b)| a + b).collect();
        Ok(self.logits_from_h(&h, data.len()).into_iter().map(sigmoid).collect())
    }

    /// Train-mode objective: mean BCE on the logits plus the L2 penalties.
    pub fn loss_and_backward(&mut self, data: &Features) -> Result<f64> {
        let x = self.inputs(data)?;
        self.check_width(&x)?;
        let rows = data.len();
        let b = self.intercept.value.get(0, 0);
        let u = self.linear.forward(&x, Mode::Train)?;
        let f = if self.config.residual_enabled {
            Some(self.residual.forward(&x, Mode::Train)?)
        } else {
            None
        };
        let h: Vec<f64> = (0..x.rows())
            .map(|i| u.get(i, 0) + b + f.as_ref().map_or(0.0, |f| f.get(i, 0)))
            .collect();
        let logits = Matrix::from_vec(rows, 1, self.logits_from_h(&h, rows))?;
        let target = Matrix::from_vec(rows, 1, data.y.clone())?;
        let (mut loss, ds) = bce_with_logits(&logits, &target)?;
        let dh = match self.config.pairing {
            Pairing::Pairwise => Matrix::vcat(&[&ds, &ds.map(|v| -v)])?,
            Pairing::SingleVector => ds,
        };
        self.linear.backward(&dh)?;
        if !self.intercept.frozen {
            self.intercept.grad.data_mut()[0] += dh.sum();
        }
        if f.is_some() {
            self.residual.backward(&dh)?;
        }
        let lam_l = self.config.lambda_linear;
        let lam_r = self.config.lambda_residual;
        for p in self.linear.params_mut() {
            loss += p.add_l2_penalty(lam_l);
        }
        if self.config.residual_enabled {
            for p in self.residual.params_mut().into_iter().filter(|p| p.name == "weight") {
                loss += p.add_l2_penalty(lam_r);
            }
        }
        Ok(loss)
    }

    /// Sets the linear path (and intercept in single-vector mode) to the
    /// L2-penalized logit fit of `data`, using `lambda_linear`.
    pub fn warm_start(&mut self, data: &Features) -> Result<()> {
        let (x, intercept) = match self.config.pairing {
            Pairing::Pairwise => {
                if data.options.len() != 2 {
                    return Err(Error::Validation("pairwise scoring needs two options".into()));
                }
                (data.options[0].zip_map(&data.options[1], |a, b| a - b)?, false)
            }
            Pairing::SingleVector => (data.concat()?, true),
        };
        self.check_width(&x)?;
        let cfg = FitConfig { lambda: self.config.lambda_linear, ..FitConfig::default() };
        let fit = fit_design(&x, &data.y, intercept, &cfg, None)?;
        self.linear.params_mut()[0].value = Matrix::from_vec(self.input_dim, 1, fit.weights)?;
        if let Some(b) = fit.intercept {
            self.intercept.value.set(0, 0, b);
        }
        Ok(())
    }

    /// Linear-path weights as effects-coded partworths.
    pub fn extract_linear_partworths(&self, schema: &AttributeSchema) -> Result<PartworthTable> {
        if schema.width() != self.input_dim {
            return Err(Error::Schema(format!(
                "schema width {} does not match model input width {}",
                schema.width(),
                self.input_dim
            )));
        }
        let w = self.linear.params()[0].value.data().to_vec();
        Ok(effects_code(&PartworthTable::from_flat(schema.clone(), &w)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

impl HasParams for ResidualNet {
    fn params(&self) -> Vec<&Parameter> {
        let mut p = self.linear.params();
        p.push(&self.intercept);
        p.extend(self.residual.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.linear.params_mut();
        p.push(&mut self.intercept);
        p.extend(self.residual.params_mut());
        p
    }
}

impl BinaryClassifier for ResidualNet {
    fn batch_loss(&mut self, batch: &Features) -> Result<f64> {
        self.loss_and_backward(batch)
    }

    fn scores(&self, data: &Features) -> Result<Vec<f64>> {
        self.predict_scores(data)
    }

    fn clear_cache(&mut self) {
        self.linear.clear_cache();
        self.residual.clear_cache();
    }
}

pub fn train_residual(
    model: &mut ResidualNet,
    train: &Features,
    val: Option<&Features>,
    cfg: &ClassifierTrainConfig,
) -> Result<TrainReport> {
    let name = format!("residual_conjointnet_h{}", model.config.hidden_nodes);
    if model.config.warm_start_linear {
        model.warm_start(train)?;
    }
    fit_classifier(model, &name, train, val, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemUtility {
    pub item_id: String,
    #[serde(rename = "U")]
    pub u: f64,
    pub f: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub n: usize,
    pub f_mean: f64,
    pub f_std: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Mean `|f - mean f|`.
    pub mean_abs_f: f64,
    /// Mean `|U - mean U|`.
    pub mean_abs_u: f64,
    /// `mean_abs_f / (mean_abs_f + mean_abs_u)`, 0 when both vanish.
    pub residual_share: f64,
    /// Items with the largest `|f - mean f|`, largest first.
    pub top: Vec<ItemUtility>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Distribution of the residual path over `x`'s rows. Both paths are
/// centred over the evaluated items first: a constant offset cancels in
/// pairwise differences and trades off against the intercept otherwise, so
/// it says nothing about either path.
pub fn residual_diagnostics(
    model: &ResidualNet,
    x: &Matrix,
    ids: &[String],
    top_n: usize,
) -> Result<(ResidualDiagnostics, Vec<ItemUtility>)> {
    if ids.len() != x.rows() {
        return Err(Error::Validation(format!("{} ids for {} items", ids.len(), x.rows())));
    }
    let (u, f) = model.paths(x)?;
    let (mu, mf) = (mean(&u), mean(&f));
    let abs_f: Vec<f64> = f.iter().map(|v| (v - mf).abs()).collect();
    let mean_abs_f = mean(&abs_f);
    let mean_abs_u = mean(&u.iter().map(|v| (v - mu).abs()).collect::<Vec<_>>());
    let residual_share = if mean_abs_f + mean_abs_u > 0.0 { mean_abs_f / (mean_abs_f + mean_abs_u) } else { 0.0 };
    let var = mean(&f.iter().map(|v| (v - mf) * (v - mf)).collect::<Vec<_>>());
    let items: Vec<ItemUtility> = ids
        .iter()
        .zip(u.iter().zip(&f))
        .map(|(id, (&u, &f))| ItemUtility { item_id: id.clone(), u, f, h: u + f })
        .collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    // stable sort keeps input order among equal magnitudes
    order.sort_by(|&a, &b| abs_f[b].total_cmp(&abs_f[a]));
    let top = order.iter().take(top_n).map(|&i| items[i].clone()).collect();
    let diag = ResidualDiagnostics {
        n: x.rows(),
        f_mean: mf,
        f_std: var.sqrt(),
        f_min: f.iter().copied().fold(f64::INFINITY, f64::min),
        f_max: f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_abs_f,
        mean_abs_u,
        residual_share,
        top,
    };
    Ok((diag, items))
}

pub fn write_item_utilities_csv(path: &Path, items: &[ItemUtility]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for it in items {
        w.serialize(it)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
