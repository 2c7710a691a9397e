//! Layer kinds with explicit forward/backward passes.
//!
//! Activations are laid out as `(batch, features)`. Dense weights have shape
//! `(in_dim, out_dim)` so that `y = x W + b`.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::{Matrix, Parameter};
use crate::error::{Error, Result};

pub const BATCHNORM_MOMENTUM: f64 = 0.1;
pub const BATCHNORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Dense,
    ReLU,
    Sigmoid,
    BatchNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl LayerSpec {
    pub fn dense(in_dim: usize, out_dim: usize) -> Self {
        Self {
            kind: LayerKind::Dense,
            in_dim,
            out_dim,
        }
    }

    pub fn relu(dim: usize) -> Self {
        Self {
            kind: LayerKind::ReLU,
            in_dim: dim,
            out_dim: dim,
        }
    }

    pub fn sigmoid(dim: usize) -> Self {
        Self {
            kind: LayerKind::Sigmoid,
            in_dim: dim,
            out_dim: dim,
        }
    }

    pub fn batch_norm(dim: usize) -> Self {
        Self {
            kind: LayerKind::BatchNorm,
            in_dim: dim,
            out_dim: dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::Validation(format!("{self:?}: dims must be > 0")));
        }
        if self.kind != LayerKind::Dense && self.in_dim != self.out_dim {
            return Err(Error::Validation(format!(
                "{:?} layer requires in_dim == out_dim, got {} -> {}",
                self.kind, self.in_dim, self.out_dim
            )));
        }
        Ok(())
    }
}

/// Logistic function. Negative inputs are evaluated as `1 - σ(-x)`, which is
/// exact for `σ(-x) >= 0.5`, so `σ(x) + σ(-x) == 1.0` holds bit-for-bit.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        1.0 - 1.0 / (1.0 + x.exp())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Option<Parameter>,
    #[serde(skip)]
    input: Option<Matrix>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, with_bias: bool, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot bound");
        let data = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        let weight = Parameter::new("weight", Matrix::from_vec(in_dim, out_dim, data).expect("sized"));
        let bias = with_bias.then(|| Parameter::new("bias", Matrix::zeros(1, out_dim)));
        Self {
            weight,
            bias,
            input: None,
        }
    }

    pub fn from_parts(weight: Matrix, bias: Option<Matrix>) -> Self {
        Self {
            weight: Parameter::new("weight", weight),
            bias: bias.map(|b| Parameter::new("bias", b)),
            input: None,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.cols()
    }

    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.matmul(&self.weight.value)?;
        if let Some(b) = &self.bias {
            y.add_row_broadcast(&b.value)?;
        }
        Ok(y)
    }

    fn backward(&mut self, grad: &Matrix) -> Result<Matrix> {
        let x = self.input.take().ok_or(Error::NoForwardCache)?;
        let dw = x.t_matmul(grad)?;
        self.weight.grad.add_assign(&dw)?;
        if let Some(b) = &mut self.bias {
            b.grad.add_assign(&grad.sum_rows())?;
        }
        grad.matmul_t(&self.weight.value)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Relu {
    pub dim: usize,
    #[serde(skip)]
    input: Option<Matrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sigmoid {
    pub dim: usize,
    #[serde(skip)]
    output: Option<Matrix>,
}

#[derive(Debug, Clone)]
struct BnCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

/// Per-feature batch normalization with learned scale and shift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Parameter,
    pub beta: Parameter,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    #[serde(skip)]
    cache: Option<BnCache>,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Parameter::new("gamma", Matrix::filled(1, dim, 1.0)),
            beta: Parameter::new("beta", Matrix::zeros(1, dim)),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: BATCHNORM_MOMENTUM,
            eps: BATCHNORM_EPS,
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.running_mean.len()
    }

    fn normalize(&self, x: &Matrix, mean: &[f64], inv_std: &[f64]) -> (Matrix, Matrix) {
        let (n, d) = x.shape();
        let mut xhat = Matrix::zeros(n, d);
        let mut y = Matrix::zeros(n, d);
        let g = self.gamma.value.data();
        let b = self.beta.value.data();
        for r in 0..n {
            for c in 0..d {
                let h = (x.get(r, c) - mean[c]) * inv_std[c];
                xhat.set(r, c, h);
                y.set(r, c, g[c] * h + b[c]);
            }
        }
        (xhat, y)
    }

    fn forward_train(&mut self, x: &Matrix) -> Matrix {
        let (n, d) = x.shape();
        let mean: Vec<f64> = x.sum_rows().data().iter().map(|s| s / n as f64).collect();
        let mut var = vec![0.0; d];
        for r in 0..n {
            for (c, v) in var.iter_mut().enumerate() {
                let dx = x.get(r, c) - mean[c];
                *v += dx * dx;
            }
        }
        var.iter_mut().for_each(|v| *v /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let (xhat, y) = self.normalize(x, &mean, &inv_std);

        let unbias = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
        for c in 0..d {
            self.running_mean[c] = (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean[c];
            self.running_var[c] = (1.0 - self.momentum) * self.running_var[c] + self.momentum * var[c] * unbias;
        }
        self.cache = Some(BnCache { xhat, inv_std });
        y
    }

    fn forward_infer(&self, x: &Matrix) -> Matrix {
        let inv_std: Vec<f64> = self
            .running_var
            .iter()
            .map(|v| 1.0 / (v + self.eps).sqrt())
            .collect();
        self.normalize(x, &self.running_mean, &inv_std).1
    }

    fn backward(&mut self, grad: &Matrix) -> Result<Matrix> {
        let BnCache { xhat, inv_std } = self.cache.take().ok_or(Error::NoForwardCache)?;
        grad.check_same_shape(&xhat, "batchnorm backward")?;
        let (n, d) = grad.shape();
        let gamma = self.gamma.value.data().to_vec();
        let mut sum_dy = vec![0.0; d];
        let mut sum_dy_xhat = vec![0.0; d];
        for r in 0..n {
            for c in 0..d {
                let g = grad.get(r, c);
                sum_dy[c] += g;
                sum_dy_xhat[c] += g * xhat.get(r, c);
            }
        }
        for c in 0..d {
            self.beta.grad.data_mut()[c] += sum_dy[c];
            self.gamma.grad.data_mut()[c] += sum_dy_xhat[c];
        }
        let nf = n as f64;
        let mut dx = Matrix::zeros(n, d);
        for r in 0..n {
            for c in 0..d {
                let v = gamma[c] * inv_std[c] / nf
                    * (nf * grad.get(r, c) - sum_dy[c] - xhat.get(r, c) * sum_dy_xhat[c]);
                dx.set(r, c, v);
            }
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Layer {
    Dense(Dense),
    ReLU(Relu),
    Sigmoid(Sigmoid),
    BatchNorm(BatchNorm),
}

impl Layer {
    pub fn from_spec<R: Rng + ?Sized>(spec: &LayerSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            LayerKind::Dense => Layer::Dense(Dense::new(spec.in_dim, spec.out_dim, true, rng)),
            LayerKind::ReLU => Layer::ReLU(Relu {
                dim: spec.in_dim,
                input: None,
            }),
            LayerKind::Sigmoid => Layer::Sigmoid(Sigmoid {
                dim: spec.in_dim,
                output: None,
            }),
            LayerKind::BatchNorm => Layer::BatchNorm(BatchNorm::new(spec.in_dim)),
        })
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense(d) => LayerSpec::dense(d.in_dim(), d.out_dim()),
            Layer::ReLU(r) => LayerSpec::relu(r.dim),
            Layer::Sigmoid(s) => LayerSpec::sigmoid(s.dim),
            Layer::BatchNorm(b) => LayerSpec::batch_norm(b.dim()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.spec().in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.spec().out_dim
    }

    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<Matrix> {
        if mode == Mode::Infer {
            return self.infer(x);
        }
        Ok(match self {
            Layer::Dense(d) => {
                let y = d.apply(x)?;
                d.input = Some(x.clone());
                y
            }
            Layer::ReLU(r) => {
                r.input = Some(x.clone());
                x.map(|v| v.max(0.0))
            }
            Layer::Sigmoid(s) => {
                let y = x.map(sigmoid);
                s.output = Some(y.clone());
                y
            }
            Layer::BatchNorm(b) => b.forward_train(x),
        })
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        Ok(match self {
            Layer::Dense(d) => d.apply(x)?,
            Layer::ReLU(_) => x.map(|v| v.max(0.0)),
            Layer::Sigmoid(_) => x.map(sigmoid),
            Layer::BatchNorm(b) => b.forward_infer(x),
        })
    }

    pub fn backward(&mut self, grad: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => d.backward(grad),
            Layer::ReLU(r) => {
                let x = r.input.take().ok_or(Error::NoForwardCache)?;
                x.zip_map(grad, |xv, g| if xv > 0.0 { g } else { 0.0 })
            }
            Layer::Sigmoid(s) => {
                let y = s.output.take().ok_or(Error::NoForwardCache)?;
                y.zip_map(grad, |yv, g| g * yv * (1.0 - yv))
            }
            Layer::BatchNorm(b) => b.backward(grad),
        }
    }

    pub fn params(&self) -> Vec<&Parameter> {
        match self {
            Layer::Dense(d) => {
                let mut v = vec![&d.weight];
                v.extend(d.bias.as_ref());
                v
            }
            Layer::BatchNorm(b) => vec![&b.gamma, &b.beta],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        match self {
            Layer::Dense(d) => {
                let mut v = vec![&mut d.weight];
                v.extend(d.bias.as_mut());
                v
            }
            Layer::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta],
            _ => Vec::new(),
        }
    }

    pub fn clear_cache(&mut self) {
        match self {
            Layer::Dense(d) => d.input = None,
            Layer::ReLU(r) => r.input = None,
            Layer::Sigmoid(s) => s.output = None,
            Layer::BatchNorm(b) => b.cache = None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_definition() {
        let mut l = Layer::ReLU(Relu { dim: 3, input: None });
        let x = Matrix::from_rows(&[vec![-1.0, 0.0, 3.5]]).unwrap();
        assert_eq!(l.forward(&x, Mode::Train).unwrap().data(), &[0.0, 0.0, 3.5]);
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        let l = Layer::Sigmoid(Sigmoid { dim: 1, output: None });
        let y = l.infer(&Matrix::zeros(1, 1)).unwrap();
        assert_eq!(y.data(), &[0.5]);
    }

    #[test]
    fn dense_identity() {
        let l = Layer::Dense(Dense::from_parts(Matrix::identity(2), Some(Matrix::zeros(1, 2))));
        let y = l.infer(&Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(LayerSpec {
            kind: LayerKind::ReLU,
            in_dim: 3,
            out_dim: 4
        }
        .validate()
        .is_err());
        assert!(LayerSpec::dense(3, 4).validate().is_ok());
        assert!(LayerSpec::dense(0, 4).validate().is_err());
    }

    #[test]
    fn backward_without_forward_is_protocol_error() {
        let mut l = Layer::ReLU(Relu { dim: 1, input: None });
        assert!(matches!(l.backward(&Matrix::zeros(1, 1)), Err(Error::NoForwardCache)));
    }

    #[test]
    fn batchnorm_train_output_is_standardized() {
        let mut bn = Layer::BatchNorm(BatchNorm::new(1));
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![6.0]]).unwrap();
        let y = bn.forward(&x, Mode::Train).unwrap();
        assert!(y.sum().abs() < 1e-12);
        let var: f64 = y.data().iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn batchnorm_infer_uses_running_stats_with_batch_of_one() {
        let mut bn = BatchNorm::new(2);
        bn.running_mean = vec![1.0, -1.0];
        bn.running_var = vec![4.0 - BATCHNORM_EPS, 1.0 - BATCHNORM_EPS];
        let l = Layer::BatchNorm(bn);
        let y = l.infer(&Matrix::from_rows(&[vec![3.0, 0.0]]).unwrap()).unwrap();
        assert!((y.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((y.get(0, 1) - 1.0).abs() < 1e-12);
    }
}
