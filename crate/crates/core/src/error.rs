use thiserror::Error;

/// Errors raised by the exact-arithmetic toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("undecidable within {digits} digits: {context}")]
    Undecidable { digits: usize, context: String },
    #[error("offset {0} has no terminating expansion in base {1}")]
    NonTerminating(String, u32),
    #[error("invalid base {0}")]
    InvalidBase(u32),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("prefix of length {len} is shorter than k = {k}")]
    PrefixTooShort { len: usize, k: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("quasi-partition construction violated: {0}")]
    ConstructionViolation(String),
    #[error("backward orbit mismatch: {0}")]
    Mismatch(String),
    #[error("state is not on the boundary of the simplex: {0}")]
    NotBoundary(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("anomaly: {0}")]
    Anomaly(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
