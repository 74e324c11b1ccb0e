//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// System size outside what an engine is willing to allocate.
    #[error("{context}: {n_sites} sites exceeds the supported maximum of {max_sites}")]
    SystemTooLarge {
        context: &'static str,
        n_sites: usize,
        max_sites: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A request that is representable but inconsistent with the model it is
    /// applied to (site index off the lattice, observable/state mismatch, ...).
    #[error("incompatible request: {0}")]
    Incompatible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn incompatible(msg: impl Into<String>) -> Self {
        Error::Incompatible(msg.into())
    }
}
