//! Dense numeric substrate: matrices, layers, losses, optimizers and a
//! finite-difference gradient checker.

mod gradcheck;
pub mod layers;
pub mod linalg;
mod loss;
mod matrix;
mod network;
mod optim;
mod param;

pub use gradcheck::{grad_check, grad_check_input, GradCheckReport, FD_STEP};
pub use layers::{sigmoid, Layer, LayerKind, LayerSpec, Mode};
pub use loss::{bce_loss, bce_with_logits, kl_standard_normal, recon_loss, ReconLossKind, BCE_EPS};
pub use matrix::Matrix;
pub use network::Network;
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use param::{HasParams, Parameter};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The single generator type threaded through every stochastic operation.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
