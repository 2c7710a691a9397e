use serde::{Deserialize, Serialize};

use super::Matrix;

/// A trainable tensor with its accumulated gradient.
///
/// `frozen` parameters are skipped by the optimizer; `lr_scale` multiplies the
/// optimizer learning rate for this parameter only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ParameterRepr", into = "ParameterRepr")]
pub struct Parameter {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    pub frozen: bool,
    pub lr_scale: f64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
            frozen: false,
            lr_scale: 1.0,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.data().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds `lambda * ||w||²` to the objective: accumulates `2 lambda w` into
    /// the gradient and returns the penalty value.
    pub fn add_l2_penalty(&mut self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let mut sq = 0.0;
        for (g, &w) in self.grad.data_mut().iter_mut().zip(self.value.data()) {
            *g += 2.0 * lambda * w;
            sq += w * w;
        }
        lambda * sq
    }
}

// Gradients are transient and never persisted.
#[derive(Serialize, Deserialize)]
struct ParameterRepr {
    name: String,
    value: Matrix,
    #[serde(default)]
    frozen: bool,
    #[serde(default = "one")]
    lr_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl From<ParameterRepr> for Parameter {
    fn from(r: ParameterRepr) -> Self {
        let mut p = Parameter::new(r.name, r.value);
        p.frozen = r.frozen;
        p.lr_scale = r.lr_scale;
        p
    }
}

impl From<Parameter> for ParameterRepr {
    fn from(p: Parameter) -> Self {
        Self {
            name: p.name,
            value: p.value,
            frozen: p.frozen,
            lr_scale: p.lr_scale,
        }
    }
}

/// Anything that owns trainable parameters in a fixed, stable order.
pub trait HasParams {
    fn params(&self) -> Vec<&Parameter>;
    fn params_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
