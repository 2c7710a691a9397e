use serde::{Deserialize, Serialize};

use super::{Matrix, Parameter};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

/// SGD or Adam over a fixed, ordered list of parameters.
///
/// Moment buffers are matched to parameters by position, so callers must pass
/// parameters in the same order on every step.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    step: u64,
    moments: Vec<(Matrix, Matrix)>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Validation(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            step: 0,
            moments: Vec::new(),
        })
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// Frozen parameters keep their value (their gradients are still cleared).
    pub fn step(&mut self, params: &mut [&mut Parameter]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| {
                    let (r, c) = p.value.shape();
                    (Matrix::zeros(r, c), Matrix::zeros(r, c))
                })
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters, step got {}",
                self.moments.len(),
                params.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);

        for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
            if m.shape() != p.value.shape() {
                return Err(Error::Shape(format!("moment shape mismatch for {}", p.name)));
            }
            if !p.frozen {
                let lr = self.learning_rate * p.lr_scale;
                match self.kind {
                    OptimizerKind::Sgd => {
                        for (w, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
                            *w -= lr * g;
                        }
                    }
                    OptimizerKind::Adam => {
                        let Parameter { value, grad, .. } = &mut **p;
                        for (((w, &g), mi), vi) in value
                            .data_mut()
                            .iter_mut()
                            .zip(grad.data())
                            .zip(m.data_mut())
                            .zip(v.data_mut())
                        {
                            *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * g;
                            *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * g * g;
                            let m_hat = *mi / bc1;
                            let v_hat = *vi / bc2;
                            *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                        }
                    }
                }
            }
            p.zero_grad();
        }
        Ok(())
    }
}
