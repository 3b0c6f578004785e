use thiserror::Error;

use crate::spectral::ResidueReport;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Mismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("logarithm of non-positive value {value} at vertex `{vertex}`")]
    LogDomain { vertex: String, value: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("residue limit not certified for degree {degree}: {reason}")]
    Uncertified {
        degree: usize,
        reason: String,
        report: Box<ResidueReport>,
    },

    #[error("no E-invariant state exists: {0}")]
    NoInvariantState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
