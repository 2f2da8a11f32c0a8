use crate::function::FemFunction;
use thiserror::Error;

/// Errors reported by the solver pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        best: Box<FemFunction>,
    },

    #[error("eigenfunction is not positive in the interior (min interior value {min_value:e})")]
    Positivity { min_value: f64 },

    #[error("lambda = {lambda} does not exceed the first eigenvalue {lambda1}")]
    Gate { lambda: f64, lambda1: f64 },

    #[error("no admissible truncation level up to {cap:e}; the reaction does not look superlinear")]
    Superlinearity { cap: f64 },

    #[error("no negative energy found along the scaled eigenfunction ray (best {best_value:e})")]
    Seed { best_value: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
