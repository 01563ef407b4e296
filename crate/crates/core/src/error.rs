use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by model construction, simulation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// A model or configuration that violates the hypothesis of a limit theorem.
    #[error("hypothesis violated ({hypothesis}): {detail}")]
    Hypothesis {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("runaway guard: {steps} steps exceeded the cap of {cap} (a = {a}); {hint}")]
    RunawayGuard {
        steps: u64,
        cap: u64,
        a: f64,
        hint: &'static str,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("empty input: {what}")]
    Empty { what: &'static str },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from an invalid configuration rather than
    /// a runtime failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Hypothesis { .. } | Error::Config(_) | Error::Empty { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
