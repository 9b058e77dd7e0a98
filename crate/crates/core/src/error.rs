//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the modeling, solving and training layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A caller violated a documented precondition (dimension mismatch,
    /// invalid range, bad option value).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Interpolation or evaluation requested outside the domain of definition.
    #[error("out of domain: {what} = {value} not in [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Newton iteration failed to produce a consistent algebraic state.
    #[error("consistency failure at t = {t}: residual {residual:.3e} after {iters} iterations")]
    ConsistencyFailure { t: f64, residual: f64, iters: usize },

    /// Time integration aborted (step-size underflow or repeated rejections).
    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    /// Forward-mode differentiation produced a non-finite value.
    #[error("non-finite gradient in stage `{stage}` (parameter chunk starting at {chunk_start})")]
    NonFiniteGradient { stage: &'static str, chunk_start: usize },

    /// A linear solve met a numerically singular matrix.
    #[error("singular matrix in {context} (pivot {pivot:.3e} at row {row})")]
    SingularMatrix {
        context: &'static str,
        pivot: f64,
        row: usize,
    },

    /// Configuration file problems: syntax, missing keys, bad values.
    #[error("config error: {0}")]
    Config(String),

    /// Training aborted after repeated recoverable failures.
    #[error("training aborted: {0}")]
    TrainingAborted(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }
}
