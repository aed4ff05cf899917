use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Argument outside the domain of a mathematical function (e.g. a gamma pole).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// The statistic is undefined for this input (all-zero series, zero variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: i64 },

    #[error("estimation failed after {iterations} iterations (best objective {best_objective}): {reason}")]
    Estimation {
        iterations: usize,
        best_objective: f64,
        reason: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end: 1 for validation
    /// failures, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::NonFinite { .. }
            | Error::Estimation { .. } => 2,
            _ => 1,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
