//! Error type shared by every module in the crate.
//!
//! Numerical routines here fail for a small number of structural reasons
//! (bad dimensions, leaving a coordinate chart, a metric losing positivity,
//! an optimizer stalling) and callers are expected to match on the variant,
//! so this is an enum rather than a boxed chain.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or matrix dimensions do not match what the operation needs.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    /// A Hermitian metric failed a positivity or conditioning check.
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    /// A parametrized map failed to be an immersion at a sample point.
    #[error("immersion failure: {0}")]
    Immersion(String),

    /// A point left the coordinate chart an operation is defined on.
    #[error("chart boundary: {0}")]
    ChartBoundary(String),

    /// Configuration file or parameter set rejected.
    #[error("config error: {0}")]
    Config(String),

    /// A cut-and-paste surgery could not be assembled.
    #[error("surgery error: {0}")]
    Surgery(String),

    /// Iterative minimization failed to make progress.
    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeomError>;
