use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure classes. `class()` groups them for exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("degenerate truncation: no mass below cutoff {cutoff}")]
    DegenerateTruncation { cutoff: f64 },
    #[error("degenerate scale: truncated integral vanishes")]
    DegenerateScale,
    #[error("mean is infinite for this distribution")]
    InfiniteMean,
    #[error("{what} of {requested} exceeds the cap {cap}")]
    ResourceCap {
        what: &'static str,
        requested: u64,
        cap: u64,
    },
    #[error("all {replicas} replicas were censored")]
    AllCensored { replicas: u64 },
    #[error("insufficient data: {reason}")]
    InsufficientData { reason: String },
    #[error("no convergence: {reason}")]
    NonConvergence { reason: String },
    #[error("statistical failure: {reason}")]
    Statistical { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Resource,
    Statistical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. }
            | Error::Parse { .. }
            | Error::DegenerateTruncation { .. }
            | Error::DegenerateScale
            | Error::InfiniteMean => ErrorClass::Config,
            Error::ResourceCap { .. } => ErrorClass::Resource,
            Error::AllCensored { .. }
            | Error::InsufficientData { .. }
            | Error::NonConvergence { .. }
            | Error::Statistical { .. } => ErrorClass::Statistical,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
