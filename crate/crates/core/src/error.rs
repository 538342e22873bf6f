use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("design rows {first} and {second} coincide (distance {distance:e})")]
    DuplicatePoint {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("correlation matrix is not positive definite at jitter cap {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("no convergence after {iterations} iterations")]
    IterationLimit { iterations: usize, last: Vec<f64> },

    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),

    #[error("point too close to the boundary c'c = 1 (c'c = {norm2})")]
    BoundarySingularity { norm2: f64 },

    #[error("input {value} outside [{lower}, {upper}] in dimension {dim}")]
    OutOfBounds {
        dim: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
