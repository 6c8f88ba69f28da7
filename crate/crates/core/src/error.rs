use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("distribution for basis index {basis} sums to {total}, expected 1")]
    Unnormalized { basis: usize, total: f64 },

    #[error("qubit {qubit} is not held by the eavesdropper")]
    AccessViolation { qubit: usize },

    #[error("gate does not match the attack's star-gate variant")]
    GateMismatch,

    #[error("config #{index}: {source}")]
    InConfig {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
