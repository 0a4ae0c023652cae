use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported differential operator order {order} (supported: 1, 2)")]
    UnsupportedOperator { order: u32 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "ill-conditioned Gram matrix: pivot {pivot_index} = {pivot:e} is below tolerance {tolerance:e}{}",
        suggestion(*suggested_jitter)
    )]
    IllConditionedGram {
        pivot_index: usize,
        pivot: f64,
        tolerance: f64,
        /// Smallest power of ten (up to `1e-2`) for which the jittered factorization succeeds.
        suggested_jitter: Option<f64>,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionError {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0} lies outside [0, 1]")]
    DomainError(f64),

    #[error("L-derivative of an order-1 spline is discontinuous at knot {0}")]
    AmbiguousAtKnot(f64),

    #[error("coarse grid is not a subset of the fine grid (point {0} missing)")]
    GridNestingError(f64),

    #[error("training labels contain a single class")]
    DegenerateLabels,

    #[error("invalid kernel matrix: {0}")]
    InvalidKernelMatrix(String),

    #[error("SMO did not converge after {iterations} iterations (worst KKT violation {worst_violation:e})")]
    ConvergenceFailure {
        iterations: usize,
        worst_violation: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

fn suggestion(jitter: Option<f64>) -> String {
    match jitter {
        Some(j) => format!("; retry with jitter {j:e}"),
        None => "; no jitter up to 1e-2 restores positive definiteness".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
