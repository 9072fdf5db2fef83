use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (bad parameter, empty grid, point outside the window, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e} ({context})")]
    Quadrature { estimate: f64, error: f64, context: String },

    /// An iterative eigensolver ran out of iterations.
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A dense factorization broke down (matrix not positive definite, singular pivot, ...).
    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
