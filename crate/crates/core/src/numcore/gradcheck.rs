//! Central finite-difference gradient checker.

use super::{HasParams, Matrix};
use crate::error::{Error, Result};

pub const FD_STEP: f64 = 1e-5;
const MAX_CHECKED_PARAMS: usize = 10_000;
/// Gradients smaller than this are compared in absolute terms; below it the
/// central difference is dominated by rounding in the loss.
pub const REL_FLOOR: f64 = 1e-6;
/// Disagreements above this are re-measured with smaller steps, since a
/// step that straddles a ReLU kink gives a wrong difference quotient.
const REFINE_ABOVE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(parameter index, element index)` of the worst element.
    pub worst: (usize, usize),
    pub checked: usize,
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

/// Smallest relative error over the step ladder `h, h/10, h/100`, stopping
/// as soon as one agrees.
fn best_err(analytic: f64, mut diff: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for h in [FD_STEP, FD_STEP / 10.0, FD_STEP / 100.0] {
        best = best.min(rel_err(analytic, diff(h)?));
        if best <= REFINE_ABOVE {
            break;
        }
    }
    Ok(best)
}

/// Compares analytic parameter gradients against central differences.
///
/// `loss_fn` must run a forward pass, compute the scalar loss, and run the
/// backward pass that accumulates gradients into the model's parameters. It is
/// invoked at least `2 * num_params + 1` times; it must be deterministic.
/// Frozen parameters are skipped.
pub fn grad_check<M, F>(model: &mut M, mut loss_fn: F) -> Result<GradCheckReport>
where
    M: HasParams,
    F: FnMut(&mut M) -> Result<f64>,
{
    if model.num_params() > MAX_CHECKED_PARAMS {
        return Err(Error::Validation(format!(
            "grad_check supports at most {MAX_CHECKED_PARAMS} parameters, model has {}",
            model.num_params()
        )));
    }
    model.zero_grad();
    loss_fn(model)?;
    let analytic: Vec<Matrix> = model.params().iter().map(|p| p.grad.clone()).collect();

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    let frozen: Vec<bool> = model.params().iter().map(|p| p.frozen).collect();
    for (pi, grad) in analytic.iter().enumerate() {
        if frozen[pi] {
            continue;
        }
        for ei in 0..grad.data().len() {
            let e = best_err(grad.data()[ei], |h| {
                let orig = model.params()[pi].value.data()[ei];
                model.params_mut()[pi].value.data_mut()[ei] = orig + h;
                let plus = loss_fn(model);
                model.params_mut()[pi].value.data_mut()[ei] = orig - h;
                let minus = loss_fn(model);
                model.params_mut()[pi].value.data_mut()[ei] = orig;
                Ok((plus? - minus?) / (2.0 * h))
            })?;
            if e > report.max_relative_error {
                report.max_relative_error = e;
                report.worst = (pi, ei);
            }
            report.checked += 1;
        }
    }
    model.zero_grad();
    Ok(report)
}

/// Checks a gradient with respect to an input matrix. `f` returns the loss and
/// its analytic gradient at the given point.
pub fn grad_check_input<F>(x: &Matrix, mut f: F) -> Result<f64>
where
    F: FnMut(&Matrix) -> Result<(f64, Matrix)>,
{
    let (_, analytic) = f(x)?;
    x.check_same_shape(&analytic, "grad_check_input")?;
    let mut worst: f64 = 0.0;
    for i in 0..x.data().len() {
        let e = best_err(analytic.data()[i], |h| {
            let mut p = x.clone();
            p.data_mut()[i] += h;
            let mut q = x.clone();
            q.data_mut()[i] -= h;
            Ok((f(&p)?.0 - f(&q)?.0) / (2.0 * h))
        })?;
        worst = worst.max(e);
    }
    Ok(worst)
}
