//! Choice-based conjoint analysis and neural preference models.
//!
//! The crate is organized bottom-up:
//!
//! - [`numcore`]: matrices, layers with explicit backward passes, losses,
//!   optimizers and a finite-difference gradient checker.
//! - [`linear_conjoint`]: the additive partworth model fitted by penalized
//!   binary logit, with attribute importances and best-option selection.
//! - [`autoencoder`]: plain and variational autoencoders over one-hot items.
//! - [`ssl_net`]: a choice classifier on top of a pretrained encoder.
//! - [`residual_net`]: a linear partworth path plus a one-hidden-layer
//!   non-linear correction, trained jointly.
//! - [`dataio`]: dataset ingestion, one-hot encoding, splits and synthetic
//!   generators with known ground truth.
//! - [`harness`]: metrics, experiment orchestration, checkpoints and reports.

pub mod autoencoder;
pub mod dataio;
pub mod error;
pub mod harness;
pub mod linear_conjoint;
pub mod numcore;
pub mod residual_net;
pub mod schema;
pub mod ssl_net;
pub mod train;

pub use error::{Error, ErrorClass, Result};
pub use numcore::Matrix;
pub use schema::{AttributeSchema, ItemVector};
