//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A norm/gradient operation that requires a nonzero vector got the zero vector.
    #[error("operation undefined at the zero vector")]
    ZeroVector,

    /// An adversary/OLO input vector left the unit cube.
    #[error("entry {value} at index {index} is outside [0,1]")]
    OutOfRange { index: usize, value: f64 },

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("enumeration of {required} assignments exceeds cap {cap}")]
    EnumerationTooLarge { required: u128, cap: u64 },

    /// A suffix-optimum oracle call would exceed the enumeration cap.
    #[error("suffix oracle needs {required} assignments, more than cap {cap}")]
    OracleTooLarge { required: u128, cap: u64 },

    /// The adaptive adversary only supports deterministic algorithms.
    #[error("adaptive adversary requires a deterministic algorithm")]
    NondeterministicAlgorithm,

    /// Malformed instance file.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Instance entry outside the model's [0,1] range.
    #[error("load entry {value} is outside [0,1] (job {job}, position {position})")]
    Range {
        job: usize,
        position: usize,
        value: f64,
    },

    /// Invalid parameter combination.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
