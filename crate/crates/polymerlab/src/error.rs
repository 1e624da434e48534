//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension outside the supported range `{3, 4, 5}`.
    #[error("unsupported dimension {0}; this crate handles d = 3, 4, 5")]
    InvalidDimension(usize),

    /// A structurally invalid argument (wrong length, empty grid, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A parameter outside the mathematical domain of an operation.
    #[error("out of domain: {0}")]
    Domain(String),

    /// Site coordinate too large for the 16-bit packing used by the
    /// environment hash.
    #[error("site coordinate {0} outside packable range |x| < 32768")]
    SiteRange(i64),

    /// Configuration file or CLI usage problem.
    #[error("config error: {0}")]
    Config(String),

    /// Run directory contents inconsistent with the requested operation.
    #[error("run state error: {0}")]
    RunState(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for an `InvalidArgument` error.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Shorthand for a `Domain` error.
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
