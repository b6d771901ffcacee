use thiserror::Error;

/// Errors raised by the laboratory's constructions and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("field is bound to a different grid")]
    GridMismatch,
    #[error("incompatible boundary data: mean {mean:.3e} exceeds tolerance {tolerance:.3e}")]
    Incompatible { mean: f64, tolerance: f64 },
    #[error("ill-conditioned Gram system (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("candidate ladder exhausted at level {level}: best projected norm {best:.6e} below threshold {threshold:.6e}")]
    LadderExhausted {
        level: usize,
        best: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;
