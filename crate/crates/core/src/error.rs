use thiserror::Error;

/// Errors produced while building problems, taking Newton steps, or
/// certifying bounds.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller-supplied argument was outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point left the domain of an objective oracle (negative entry, or a
    /// zero entry passed to a derivative).
    #[error("domain violation: {0}")]
    Domain(String),

    /// The iterative linear solver hit a non-finite value.
    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    /// The Schur-system solve stopped at the iteration cap without reaching
    /// the requested tolerance; carries the best relative residual achieved.
    #[error(
        "newton step: linear solve reached {iterations} iterations with relative residual \
         {achieved:.3e} (requested {requested:.3e})"
    )]
    StepToleranceNotMet {
        achieved: f64,
        requested: f64,
        iterations: usize,
    },

    /// Backtracking exhausted its halving budget without finding an
    /// acceptable step: the step is defective or the problem has stalled.
    #[error("line search failed after {backtracks} backtracking steps")]
    LineSearchFailed { backtracks: usize },

    /// The residual tolerance was not reached within the iteration budget.
    #[error("no convergence after {iterations} Newton iterations (residual {residual:.3e})")]
    MaxIterationsReached { iterations: usize, residual: f64 },

    /// A bound could not be backed by a valid certificate (for example the
    /// feasibility projection produced a nonpositive coordinate).
    #[error("certification failed: {0}")]
    Certification(String),

    /// The Hessian block oracle detected loss of positive definiteness.
    #[error("hessian block not positive definite: {0}")]
    HessianNotPositiveDefinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
