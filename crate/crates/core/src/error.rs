use thiserror::Error;

use crate::sim::ConeSample;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("identity rule has no projection")]
    IdentityProjection,

    #[error("decomposition is infeasible")]
    Infeasible,

    #[error("numerical failure: {message} (condition number estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("state space of {states} configurations exceeds the cap of {cap}")]
    StateSpaceCap { states: usize, cap: usize },

    /// The backward cone grew past its point budget; the partial sample is attached.
    #[error("cone of dependence truncated after {} update points", .0.points.len())]
    TruncatedCone(Box<ConeSample>),

    #[error("malformed rule document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
