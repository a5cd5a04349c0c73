//! Multi-scale GAN for multispectral satellite imagery.
//!
//! The crate is organized around six pieces:
//!
//! - [`tensor`]: an N-D tensor tape with reverse-mode differentiation whose
//!   backward pass is itself recorded, enabling the second-order gradients
//!   the gradient penalty needs, plus a finite-difference oracle and a
//!   counter-based RNG.
//! - [`layers`]: equalized-learning-rate convolutions and dense layers,
//!   pixel-wise feature normalization, the minibatch standard deviation
//!   layer, and per-scale image emit/absorb convolutions.
//! - [`model`]: declarative construction of generator/discriminator pairs
//!   for every supported variant, with symbolic shape audits and parameter
//!   counting.
//! - [`train`]: Wasserstein critic losses with gradient penalty, RMSProp,
//!   the alternating training loop, checkpointing, and metrics.
//! - [`data`]: the tile file format, normalization, band grouping, filter
//!   predicates, a correlated Gaussian random field synthesizer, and
//!   deterministic batch iteration.

pub mod data;
pub mod error;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{DataError, ModelError, TensorError, TrainError};
pub use tensor::{finite_diff_grad, Precision, Real, RngStream, Tape, TensorData, Var};
