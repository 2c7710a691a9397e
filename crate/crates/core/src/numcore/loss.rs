//! Loss functions. Every loss returns `(value, gradient)` where the gradient
//! is taken with respect to the prediction argument.

use serde::{Deserialize, Serialize};

use super::layers::sigmoid;
use super::Matrix;
use crate::error::{Error, Result};

/// Probability clamp applied before taking logs.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReconLossKind {
    #[default]
    Bce,
    L1,
    L2,
}

fn check_binary(target: &Matrix) -> Result<()> {
    if let Some(v) = target.data().iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(Error::Validation(format!("BCE target {v} is not in {{0,1}}")));
    }
    Ok(())
}

fn bce_elementwise(pred: &Matrix, target: &Matrix) -> (f64, Matrix) {
    let n = pred.data().len().max(1) as f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        *g = (-t / p + (1.0 - t) / (1.0 - p)) / n;
    }
    (loss / n, grad)
}

/// Mean binary cross-entropy over all elements. Targets must be exactly 0 or 1.
pub fn bce_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    pred.check_same_shape(target, "bce_loss")?;
    check_binary(target)?;
    Ok(bce_elementwise(pred, target))
}

/// Mean BCE on raw logits, computed without forming probabilities first.
/// The gradient is with respect to the logits.
pub fn bce_with_logits(logits: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    logits.check_same_shape(target, "bce_with_logits")?;
    check_binary(target)?;
    let n = logits.data().len().max(1) as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for ((g, &s), &t) in grad.data_mut().iter_mut().zip(logits.data()).zip(target.data()) {
        // log(1 + e^s) - t s
        loss += s.max(0.0) + (-s.abs()).exp().ln_1p() - t * s;
        *g = (sigmoid(s) - t) / n;
    }
    Ok((loss / n, grad))
}

/// Mean per-element reconstruction loss.
pub fn recon_loss(x: &Matrix, x_recon: &Matrix, kind: ReconLossKind) -> Result<(f64, Matrix)> {
    x.check_same_shape(x_recon, "recon_loss")?;
    let n = x.data().len().max(1) as f64;
    match kind {
        ReconLossKind::Bce => {
            if let Some(v) = x.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Validation(format!(
                    "BCE reconstruction target {v} outside [0,1]"
                )));
            }
            Ok(bce_elementwise(x_recon, x))
        }
        ReconLossKind::L1 => {
            let mut grad = Matrix::zeros(x.rows(), x.cols());
            let mut loss = 0.0;
            for ((g, &a), &b) in grad.data_mut().iter_mut().zip(x_recon.data()).zip(x.data()) {
                let d = a - b;
                loss += d.abs();
                *g = if d > 0.0 {
                    1.0 / n
                } else if d < 0.0 {
                    -1.0 / n
                } else {
                    0.0
                };
            }
            Ok((loss / n, grad))
        }
        ReconLossKind::L2 => {
            let mut grad = Matrix::zeros(x.rows(), x.cols());
            let mut loss = 0.0;
            for ((g, &a), &b) in grad.data_mut().iter_mut().zip(x_recon.data()).zip(x.data()) {
                let d = a - b;
                loss += d * d;
                *g = 2.0 * d / n;
            }
            Ok((loss / n, grad))
        }
    }
}

/// KL divergence of `N(mu, exp(logvar))` from `N(0, I)`, summed over latent
/// dimensions and averaged over the batch. Returns `(loss, d/dmu, d/dlogvar)`.
pub fn kl_standard_normal(mu: &Matrix, logvar: &Matrix) -> Result<(f64, Matrix, Matrix)> {
    mu.check_same_shape(logvar, "kl_standard_normal")?;
    let batch = mu.rows().max(1) as f64;
    let mut loss = 0.0;
    let mut dmu = Matrix::zeros(mu.rows(), mu.cols());
    let mut dlv = Matrix::zeros(mu.rows(), mu.cols());
    for i in 0..mu.data().len() {
        let m = mu.data()[i];
        let lv = logvar.data()[i];
        let e = lv.exp();
        loss += -0.5 * (1.0 + lv - m * m - e);
        dmu.data_mut()[i] = m / batch;
        dlv.data_mut()[i] = 0.5 * (e - 1.0) / batch;
    }
    Ok((loss / batch, dmu, dlv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn central_diff(f: impl Fn(&Matrix) -> f64, at: &Matrix) -> Matrix {
        let h = 1e-5;
        let mut g = Matrix::zeros(at.rows(), at.cols());
        for i in 0..at.data().len() {
            let mut p = at.clone();
            p.data_mut()[i] += h;
            let mut q = at.clone();
            q.data_mut()[i] -= h;
            g.data_mut()[i] = (f(&p) - f(&q)) / (2.0 * h);
        }
        g
    }

    fn max_rel(a: &Matrix, b: &Matrix) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
            .fold(0.0, f64::max)
    }

    #[test]
    fn bce_half_is_ln2() {
        let (l, _) = bce_loss(&m(&[&[0.5]]), &m(&[&[1.0]])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bce_near_one_is_zero() {
        let (l, _) = bce_loss(&m(&[&[1.0 - BCE_EPS]]), &m(&[&[1.0]])).unwrap();
        assert!(l < 1e-6);
    }

    #[test]
    fn bce_rejects_non_binary_target() {
        assert!(matches!(
            bce_loss(&m(&[&[0.5]]), &m(&[&[0.3]])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let pred = m(&[&[0.2], &[0.7], &[0.45], &[0.91]]);
        let t = m(&[&[0.0], &[1.0], &[1.0], &[0.0]]);
        let (_, g) = bce_loss(&pred, &t).unwrap();
        let fd = central_diff(|p| bce_loss(p, &t).unwrap().0, &pred);
        assert!(max_rel(&g, &fd) < 1e-6);
    }

    #[test]
    fn bce_with_logits_matches_probability_form() {
        let s = m(&[&[-2.0], &[0.3], &[4.0]]);
        let t = m(&[&[0.0], &[1.0], &[0.0]]);
        let (a, ga) = bce_with_logits(&s, &t).unwrap();
        let (b, _) = bce_loss(&s.map(sigmoid), &t).unwrap();
        assert!((a - b).abs() < 1e-9);
        let fd = central_diff(|p| bce_with_logits(p, &t).unwrap().0, &s);
        assert!(max_rel(&ga, &fd) < 1e-6);
    }

    #[test]
    fn l1_examples() {
        let x = m(&[&[1.0, 0.0]]);
        assert_eq!(recon_loss(&x, &x, ReconLossKind::L1).unwrap().0, 0.0);
        let r = m(&[&[0.0, 1.0]]);
        assert_eq!(recon_loss(&x, &r, ReconLossKind::L1).unwrap().0, 1.0);
    }

    #[test]
    fn l2_gradient_matches_finite_differences() {
        let x = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let r = m(&[&[0.7, 0.2, -0.1], &[0.3, 0.6, 0.05]]);
        let (_, g) = recon_loss(&x, &r, ReconLossKind::L2).unwrap();
        let fd = central_diff(|p| recon_loss(&x, p, ReconLossKind::L2).unwrap().0, &r);
        assert!(max_rel(&g, &fd) < 1e-6);
    }

    #[test]
    fn recon_shape_mismatch() {
        assert!(recon_loss(&Matrix::zeros(1, 2), &Matrix::zeros(1, 3), ReconLossKind::L2).is_err());
    }

    #[test]
    fn kl_examples() {
        let (l, _, _) = kl_standard_normal(&Matrix::zeros(1, 2), &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(l, 0.0);
        let (l, _, _) = kl_standard_normal(&m(&[&[1.0]]), &m(&[&[0.0]])).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kl_gradients_match_finite_differences() {
        let mu = m(&[&[0.3, -1.2], &[0.8, 0.1]]);
        let lv = m(&[&[-0.5, 0.4], &[0.2, -1.0]]);
        let (_, dmu, dlv) = kl_standard_normal(&mu, &lv).unwrap();
        let fd_mu = central_diff(|p| kl_standard_normal(p, &lv).unwrap().0, &mu);
        let fd_lv = central_diff(|p| kl_standard_normal(&mu, p).unwrap().0, &lv);
        assert!(max_rel(&dmu, &fd_mu) < 1e-6);
        assert!(max_rel(&dlv, &fd_lv) < 1e-6);
    }
}
