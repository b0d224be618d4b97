use std::io;

use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto exit codes: configuration, domain and enumeration
/// errors are validation failures (1), I/O is 2, verification failures are 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter is out of range. `field` names the parameter.
    #[error("invalid {field}: {msg}")]
    Config { field: &'static str, msg: String },

    /// A quantity was requested outside the domain where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state has {vertices} vertices, above the enumeration bound {bound}")]
    EnumerationBound { vertices: usize, bound: usize },

    /// A structural invariant of the graph was violated.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, msg: impl Into<String>) -> Self {
        Error::Config {
            field,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
