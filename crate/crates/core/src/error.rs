use thiserror::Error;

/// Errors raised by the solver library.
///
/// Numeric payloads are stored as `f64` regardless of the working scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("profile does not match parameters: {0}")]
    DimensionMismatch(String),

    #[error("profile violates the endpoint clamp: {0}")]
    ClampViolation(String),

    #[error("no convergence after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("line search stalled after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    LineSearchStall { iterations: usize, grad_norm: f64 },

    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("coercivity estimate is not positive: {0:e}")]
    Coercivity(f64),

    #[error("tail fit: {0}")]
    TailFit(String),

    #[error("continuation step {step}: {source}")]
    ContinuationStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep at g = {g}: {source}")]
    SweepPoint {
        g: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
