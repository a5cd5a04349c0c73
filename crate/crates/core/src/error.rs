//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("{op}: expected a scalar, got shape {shape:?}")]
    NotScalar { op: &'static str, shape: Vec<usize> },

    #[error("non-finite values in {context}")]
    NonFinite { context: String },

    #[error("{op}: invalid argument: {detail}")]
    InvalidArg { op: &'static str, detail: String },
}

impl TensorError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        TensorError::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn arg(op: &'static str, detail: impl Into<String>) -> Self {
        TensorError::InvalidArg {
            op,
            detail: detail.into(),
        }
    }
}

/// Errors raised while building models or running their forward passes.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error("image set mismatch at scale {resolution}: {detail}")]
    ScaleMismatch { resolution: usize, detail: String },
}

/// Errors raised by the training loop, losses, and the optimizer.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: u64 },

    #[error("invalid training configuration: {0}")]
    BadConfig(String),

    #[error(transparent)]
    Data(#[from] DataError),
}

/// Errors raised by the binary file formats and the data pipeline.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { expected: u32, found: u32 },

    #[error("file truncated while reading {context}")]
    Truncated { context: String },

    #[error("band {band}: extent {got:?} does not match divisor {divisor} of {expected:?}")]
    BandExtent {
        band: String,
        divisor: u8,
        got: (u32, u32),
        expected: (u32, u32),
    },

    #[error("band {0} missing from tile")]
    MissingBand(String),

    #[error("tile has no bands")]
    EmptyBands,

    #[error("{count} reflectance values outside [0, 10000]")]
    OutOfRange { count: usize },

    #[error("invalid value in {context}: {detail}")]
    Invalid { context: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}
