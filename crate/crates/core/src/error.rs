use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("insufficient length: need {needed} samples, have {available}")]
    InsufficientLength { needed: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("type index {index} out of range for K = {k}")]
    TypeOutOfRange { index: usize, k: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported covariance form: {0}")]
    UnsupportedForm(String),

    #[error("per-type separator needs an interference type (oracle or detector)")]
    MissingType,

    #[error("EM component collapse after {attempts} attempts (component mass {mass:.3} < {min_mass})")]
    EmCollapse { attempts: usize, mass: f64, min_mass: f64 },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
