//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition with recoverable input
    /// (bad query, mismatched charset, malformed file). Programming errors
    /// on internal invariants panic instead.
    #[error("contract violation: {0}")]
    Contract(String),

    /// CTC target cannot be aligned to the available frames.
    #[error("infeasible alignment: target needs {needed} frames, have {frames}")]
    InfeasibleAlignment { needed: usize, frames: usize },

    /// Non-finite value where a finite one is required (diverged training).
    #[error("numerical fault: {0}")]
    Numerical(String),

    /// Malformed input data (manifest, image, corpus).
    #[error("data error: {0}")]
    Data(String),

    /// Malformed artifact file (checkpoint, index).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
