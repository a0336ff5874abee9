use thiserror::Error;

/// Errors raised by the arithmetic, the memory model, and the algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by 0*")]
    DivisionByStarZero,
    #[error("division by real zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("non-positive pivot {value} at column {column}")]
    NonPositivePivot { column: usize, value: f64 },
    #[error("zero on the diagonal of the triangular factor at {0}")]
    ZeroDiagonal(usize),
    #[error("index ({row}, {col}) outside a {n}x{n} matrix")]
    OutOfRange { row: usize, col: usize, n: usize },
    #[error("fast memory exceeded: {requested} words requested, {available} available")]
    CapacityExceeded { requested: usize, available: usize },
    #[error("handle {0} is not resident in fast memory")]
    NotResident(u64),
    #[error("write of {words} words from a handle holding only {resident}")]
    WriteExceedsHandle { words: usize, resident: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid block size {block}: need 1 <= b and 3*b^2 <= {capacity}")]
    InvalidBlockSize { block: usize, capacity: usize },
    #[error("processor grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
