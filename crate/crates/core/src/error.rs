use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("target `{0}` has no exact sampler")]
    NoExactSampler(&'static str),

    #[error("empty empirical measure")]
    EmptyMeasure,

    #[error("history window holds {have} states but {need} are required")]
    WindowUnderfilled { have: usize, need: usize },

    #[error("non-finite state at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("{0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
