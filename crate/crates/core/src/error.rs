use thiserror::Error;

/// Errors raised by grid construction, functionals and inequality checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    /// Mass on the two outermost layers of the grid exceeds the tail tolerance.
    #[error("boundary tail mass {tail:e} exceeds {tol:e} of total mass; increase half_width")]
    TailMass { tail: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("scale factor {0} outside admissible range")]
    DegenerateScale(f64),

    #[error("density has zero mass")]
    ZeroMass,

    #[error("density mass {0} is not 1 (normalize first)")]
    NotNormalized(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid density spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;
