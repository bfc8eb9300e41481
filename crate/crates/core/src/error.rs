use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} exceeds the supported envelope ({requested} > {limit})")]
    SizeLimit {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator has non-finite entries")]
    NonFinite,

    #[error("exact arithmetic overflowed while computing {0}")]
    Overflow(&'static str),

    #[error("internal consistency check failed for {what}: deviation {deviation:e}")]
    Consistency { what: &'static str, deviation: f64 },

    #[error("contract violation in {what}: deviation {deviation:e}")]
    Contract { what: &'static str, deviation: f64 },

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn size(what: &'static str, requested: impl Into<u128>, limit: impl Into<u128>) -> Self {
        Error::SizeLimit {
            what,
            requested: requested.into(),
            limit: limit.into(),
        }
    }

    /// True for errors that stem from exceeding a size envelope.
    pub fn is_size_error(&self) -> bool {
        matches!(self, Error::SizeLimit { .. } | Error::Overflow(_))
    }
}
