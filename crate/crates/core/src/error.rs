use thiserror::Error;

/// Errors raised by the bound and rate evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("counts sum to {got}, expected {expected}")]
    CountMismatch { got: u64, expected: u64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("enumeration size {size} exceeds guard {limit}")]
    SizeGuard { size: u128, limit: u128 },

    #[error("operation not defined for channel kind {0}")]
    ChannelKind(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}
