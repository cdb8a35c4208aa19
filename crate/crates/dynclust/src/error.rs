//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An exhaustive routine was asked for more work than its budget allows.
    #[error("instance too large: {0}")]
    Capability(String),

    /// A structural invariant that the algorithm relies on did not hold.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// More positively weighted components than centers: the optimum is infinite.
    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
