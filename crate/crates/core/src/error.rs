use std::path::PathBuf;

use thiserror::Error;

use crate::sysid::Direction;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("pressure {name} = {value} Pa is below absolute vacuum (-{limit} Pa gauge)")]
    PressureBound {
        name: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("clutch is not engaged")]
    ClutchNotEngaged,

    #[error("tendon rupture: strain {strain} exceeds ultimate strain {ultimate}")]
    Rupture { strain: f64, ultimate: f64 },

    #[error("no samples inside the analysis window [{lo} m, {hi} m]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("no {0} segment available")]
    MissingDirection(Direction),

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error("fit produced a non-physical coefficient: {0}")]
    NonPhysicalFit(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("unit mismatch: {0}")]
    UnitMismatch(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Underdetermined(_) | Error::NonPhysicalFit(_) => ErrorCategory::Numerical,
            Error::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
