use thiserror::Error;

use crate::scaler::NonConvergence;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// The scaler ran out of budget. Boxed because it carries the best iterate.
    #[error("{0}")]
    NonConvergence(Box<NonConvergence>),

    /// A derived structure (block form, circulant read-off) did not hold within tolerance.
    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),

    #[error("census failed: {0}")]
    Census(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("malformed document: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
