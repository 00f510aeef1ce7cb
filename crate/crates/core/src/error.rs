use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value out of numeric range: {0}")]
    OutOfRange(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite sample at cell {cell:?}")]
    NonFinite { cell: Vec<i64> },
    #[error("negative value {value} at cell {cell:?}; rearrangement needs u >= 0")]
    Sign { cell: Vec<i64>, value: f64 },
    #[error("support overflow: {0}; use a larger grid")]
    SupportOverflow(String),
    #[error("half-space is not grid compatible: {0}")]
    IncompatibleHalfSpace(String),
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
