use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input to an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration that can never be executed (checked before any work starts).
    #[error("configuration error: {0}")]
    Config(String),

    /// Parse failure in a text format, with a 1-based line number.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("training diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
