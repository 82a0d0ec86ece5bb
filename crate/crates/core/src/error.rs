use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Numerical failure (NaN loss, singular system that survived
    /// regularization, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Every candidate subarray was non-identifiable for the requested
    /// direction.
    #[error("no identifiable subarray: {0}")]
    NoSolution(String),

    /// Malformed serialized artifact (bad magic, version, shape chain).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
