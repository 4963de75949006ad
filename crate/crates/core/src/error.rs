use thiserror::Error;

/// Errors raised by the simulation engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("norm collapsed to {norm:e} before renormalization; reduce the step size")]
    NormCollapse { norm: f64 },

    #[error("dense state with {n} sites exceeds the cap of {cap}; use the mps backend")]
    Capacity { n: usize, cap: usize },

    #[error("peak lies on the grid boundary (index {index}); extend the time grid")]
    PeakAtBoundary { index: usize },

    #[error("no emission peak: rate is monotone on the grid")]
    NoPeak,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("mean spin vanishes; squeezing direction is undefined")]
    UndefinedDirection,

    #[error("{0}")]
    Undefined(String),

    #[error("backend `{backend}` cannot run model `{model}`: {reason}")]
    Capability {
        backend: String,
        model: String,
        reason: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
