use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter lies outside the open interval where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// The complement of the positive-definite region is empty on the window,
    /// so its maximum is undefined.
    #[error("h_max undefined: the Hessian is positive definite on every sampled cell")]
    EmptyComplement,

    #[error("bracket [{lo}, {hi}] does not straddle the threshold: {reason}")]
    NotStraddling { lo: f64, hi: f64, reason: String },

    #[error("curvature undefined: gradient norm {grad_norm:e} is below {tol:e}")]
    NearCritical { grad_norm: f64, tol: f64 },

    #[error("unknown field {0:?}")]
    UnknownField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
