//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the transform calculus, the analytic solvers, the
/// oracles, and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The conditioning event of the residual operator is empty in the limit:
    /// `F*(lambda) = 1` means the base variable is below the exponential
    /// almost surely.
    #[error("degenerate input: F*({lambda}) = {value} (must be < 1)")]
    DegenerateInput { lambda: f64, value: f64 },

    /// A `gamma` outside `(0, inf)` cannot be the value of a density at zero
    /// compatible with the inverse construction.
    #[error("invalid density: gamma = {0} must lie in (0, inf)")]
    InvalidDensity(f64),

    /// The stability condition of a queueing model is violated.
    #[error("unstable model: {0}")]
    Instability(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Bisection could not bracket a sign change.
    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    /// Adaptive quadrature exceeded its subdivision cap.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A truncated state space left too much probability mass in the tail.
    #[error("truncation too small: {0}")]
    Truncation(String),

    /// A segment-tracker partition is malformed.
    #[error("invalid partition: {0}")]
    Partition(String),

    /// A simulation or CLI configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An estimator was given an empty sample.
    #[error("estimation error: {0}")]
    Estimation(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
