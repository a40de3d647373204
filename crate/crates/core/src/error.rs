use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric failure: {message}")]
    Numeric {
        message: String,
        /// Best residual reached (when a solver was involved).
        best_residual: Option<f64>,
    },

    #[error("unsupported combination: {0}")]
    Capability(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("blow-up at step {step}, substep {substep} (t = {time}): {detail}")]
    BlowUp {
        step: usize,
        substep: usize,
        time: f64,
        detail: String,
    },

    #[error("newton iteration failed after {iterations} iterations (residual {residual:e}) at step {step}, substep {substep}")]
    Newton {
        step: usize,
        substep: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, best_residual: Option<f64>) -> Self {
        Error::Numeric {
            message: msg.into(),
            best_residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
