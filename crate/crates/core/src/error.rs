use std::path::PathBuf;

use crate::rrge::PivotRecord;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("index {index} out of range for axis of length {len}")]
    InvalidSelection { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix of dimension {0} is too large for brute-force evaluation")]
    TooLarge(usize),

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("matrix is numerically singular (reciprocal condition {rcond:e})")]
    Singular { rcond: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical breakdown: pivot ({row}, {col}) has scaled magnitude {magnitude:e}")]
    NumericalBreakdown { row: usize, col: usize, magnitude: f64 },

    #[error("iteration cap of {cap} pivots exceeded")]
    IterationCap { cap: usize, pivot_log: Vec<PivotRecord> },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
