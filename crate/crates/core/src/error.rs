use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "degenerate scenario: evader coincides with pursuer {pursuer} (distance {distance:e})"
    )]
    CoincidentPositions { pursuer: usize, distance: f64 },

    #[error("inadmissible control: {who} has norm {norm} at t = {time}")]
    InadmissibleControl { who: String, norm: f64, time: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("verification failed for control `{control}`: {reason}")]
    VerificationFailed { control: String, reason: String },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
