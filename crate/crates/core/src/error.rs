//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the simulator, share arithmetic, channel and protocol layers.
///
/// Display strings are prefixed with a stable tag so CLI output and transcripts
/// can be matched on the error kind.
#[derive(Debug, Error)]
pub enum Error {
    #[error("InvalidArity: {0}")]
    InvalidArity(String),

    #[error("IndexError: {0}")]
    IndexError(String),

    #[error("ArityError: {0}")]
    ArityError(String),

    #[error("DimensionError: {0}")]
    DimensionError(String),

    #[error("ImpossibleOutcome: {0}")]
    ImpossibleOutcome(String),

    #[error("NotNormalized: {0}")]
    NotNormalized(String),

    #[error("BadModulus: {0}")]
    BadModulus(String),

    #[error("BadRandomizer: {0}")]
    BadRandomizer(String),

    #[error("NotConsistent: {0}")]
    NotConsistent(String),

    #[error("DegenerateInterpolation: {0}")]
    DegenerateInterpolation(String),

    #[error("InvalidGraph: {0}")]
    InvalidGraph(String),

    #[error("ProtocolViolation: {0}")]
    ProtocolViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
