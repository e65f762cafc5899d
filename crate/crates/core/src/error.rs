use std::fmt;

use thiserror::Error;

/// Errors raised by graph construction, analysis, designs and decoders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    #[error("graph is not mixing: {0}")]
    NonMixingGraph(String),

    #[error("size exceeded: {what} ({size} > limit {limit}){progress}")]
    SizeExceeded {
        what: String,
        size: u128,
        limit: u128,
        progress: Progress,
    },

    #[error("generation failure: {0}")]
    GenerationFailure(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Partial progress attached to a size-exceeded error.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Progress(pub Option<String>);

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(p) => write!(f, "; {p}"),
            None => Ok(()),
        }
    }
}

impl Error {
    /// Stable machine-readable tag used in JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DegenerateGraph(_) => "degenerate-graph",
            Error::NonMixingGraph(_) => "non-mixing-graph",
            Error::SizeExceeded { .. } => "size-exceeded",
            Error::GenerationFailure(_) => "generation-failure",
            Error::NumericFailure(_) => "numeric-failure",
            Error::Infeasible(_) => "infeasible",
            Error::Parse(_) => "parse-error",
            Error::Io(_) => "io-error",
        }
    }

    pub(crate) fn size_exceeded(what: impl Into<String>, size: u128, limit: u128) -> Self {
        Error::SizeExceeded {
            what: what.into(),
            size,
            limit,
            progress: Progress(None),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidParameter(format!($($arg)*))
    };
}
pub(crate) use invalid;
