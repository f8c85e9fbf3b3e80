use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by `tmlp-core`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("non-finite gradient at index {index}")]
    NonFiniteGradient { index: usize },

    #[error("finite-difference oracle: loss evaluated to {value} at coordinate {index}")]
    Oracle { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("level {level} outside [1, {max}]")]
    LevelOutOfRange { level: f64, max: usize },

    #[error("inconsistent trace: {0}")]
    Consistency(String),

    #[error("training diverged at step {step}: total loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("container format: {0}")]
    Format(String),

    #[error("container integrity: {0}")]
    Integrity(String),

    #[error("container holds no complete layer chunk")]
    Underflow,

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: impl ToString, rhs: impl ToString) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Io {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
