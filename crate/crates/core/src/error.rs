use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point index {index} out of range for a space of {size} points")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("point does not belong to the ambient space: {0}")]
    NotInSpace(String),
    #[error("invalid metric pair: {0}")]
    InvalidPair(String),
    #[error("operation `{op}` is not supported for pair kind `{kind}`")]
    UnsupportedKind { op: &'static str, kind: &'static str },
    #[error("diagrams live over different metric pairs")]
    MismatchedPairs,
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("brute-force size cap exceeded: {total} points (cap {cap})")]
    SizeCapExceeded { total: usize, cap: usize },
    #[error("map does not send A into B: {0}")]
    MapLeavesSubset(String),
    #[error("point is outside the domain of the map")]
    OutsideDomain,
    #[error("empty sample: {0}")]
    EmptySample(&'static str),
    #[error("division by zero: {0}")]
    Degenerate(&'static str),
}
