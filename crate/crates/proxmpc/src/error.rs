use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by problem construction, residual evaluation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A rollout, costate pass, or plant step produced NaN/inf. `stage` is the
    /// 1-based step index at which the value appeared.
    #[error("{context} produced a non-finite value at step {stage}")]
    NonFinite { context: &'static str, stage: usize },

    #[error("jacobian entry ({row}, {col}) is non-finite")]
    NonFiniteJacobian { row: usize, col: usize },

    /// Dense LU hit a pivot below tolerance. This is the runtime face of a
    /// rank-deficient linearization.
    #[error("singular matrix: pivot {pivot} below tolerance")]
    Singular { pivot: usize },

    #[error("regularizer does not provide a {capability}")]
    Capability { capability: &'static str },

    #[error("custom prox callback failed: {0}")]
    CustomCallback(String),

    #[error("initialization did not converge: residual {residual:.3e} after {iterations} iterations")]
    InitializationFailed { residual: f64, iterations: usize },
}

impl Error {
    pub(crate) fn dimension(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            actual,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
