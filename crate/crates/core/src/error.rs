use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    /// Result not representable as a finite `f64`.
    #[error("overflow in {func} at x = {x}")]
    Overflow { func: &'static str, x: f64 },

    /// Parameter set violates a documented invariant.
    #[error("invalid parameters: {0}")]
    Validation(String),

    #[error("numerical jacobian: non-finite residual when perturbing parameter {index}")]
    JacobianNonFinite { index: usize },

    /// Residuals became non-finite mid-fit; carries the last accepted parameters.
    #[error("non-finite residuals during fit at iteration {iteration}")]
    NonFiniteResidual { iteration: usize, last_params: Vec<f64> },

    #[error("no resonance found: {0}")]
    NoResonance(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { func, msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors that stem from bad user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Validation(_)
                | Error::Parse { .. }
                | Error::Format { .. }
                | Error::Io { .. }
                | Error::Json(_)
                | Error::NoResonance(_)
        )
    }
}
