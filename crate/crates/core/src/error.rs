use thiserror::Error;

use crate::unfold::TraceEntry;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("histogram kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid conditional density: {0}")]
    InvalidCpdf(String),

    #[error("kernel transform vanishes at frequency bins {bins:?}; division blows up")]
    DivisionBlowup { bins: Vec<usize> },

    #[error("series diverged at iteration {iteration} (non-finite values)")]
    Divergence { iteration: usize, trace: Vec<TraceEntry> },

    #[error("kinematics error: {0}")]
    Kinematics(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
