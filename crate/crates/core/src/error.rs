//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Sampling-rate relationship not satisfied (e.g. non-integer decimation ratio).
    #[error("rate mismatch: {0}")]
    RateMismatch(String),

    /// Recording shorter than an operation requires.
    #[error("insufficient duration: need {need_s} s, have {have_s} s")]
    InsufficientDuration { need_s: f64, have_s: f64 },

    /// Filter specification invalid for the recording it is applied to.
    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    /// Operation received an empty input set.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input violates a domain constraint (e.g. negative entry where non-negativity is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// Not enough data points to fit a model.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Numerical failure (non-SPD matrix, failed convergence, degenerate factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Decoder model is missing a likelihood for a required state.
    #[error("model incomplete: {0}")]
    ModelIncomplete(String),

    /// A cross-validation fold lost all training examples of some class.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// On-disk data failed structural validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed file contents.
    #[error("parse error in {file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
