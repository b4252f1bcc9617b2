use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not hermitian: defect {defect:e} exceeds tolerance {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("wrong orientation: expected {expected}, got {got}")]
    Orientation { expected: &'static str, got: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("structural check failed: {0}")]
    Structural(String),
    #[error("category data rejected: {0}")]
    Category(String),
    #[error("graph rejected: {0}")]
    Graph(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
