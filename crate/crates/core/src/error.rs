use thiserror::Error;

use crate::matcore::CMat;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resource cap exceeded: need {needed}, cap {cap}")]
    Resource { needed: usize, cap: usize },

    #[error("numerical failure: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    /// The regularization path did not settle; carries the last two iterates.
    #[error("no convergence along regularization path (last step {step:.3e} at eps={eps:.1e})")]
    Convergence {
        eps: f64,
        step: f64,
        previous: Box<CMat>,
        last: Box<CMat>,
    },

    #[error("invalid input at {pointer}: {message}")]
    Input { pointer: String, message: String },
}

impl Error {
    pub fn input(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Input {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}
