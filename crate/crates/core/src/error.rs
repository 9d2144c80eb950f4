use thiserror::Error;

/// Errors raised by samplers, special functions and pricing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument outside domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("{func}: no convergence ({detail})")]
    NoConvergence { func: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scheme {scheme} cannot be used here: {reason}")]
    SchemeMismatch { scheme: &'static str, reason: String },

    #[error("time grid does not match option observations: {0}")]
    GridMismatch(String),

    #[error("QMC dimension budget exceeded: {needed} coordinates needed, {available} available")]
    DimensionBudget { needed: usize, available: usize },

    #[error("root bracket not found: {0}")]
    Bracket(String),

    #[error("inverse CDF table: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn no_convergence(func: &'static str, detail: impl Into<String>) -> Self {
        Error::NoConvergence {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidParameter(detail.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
