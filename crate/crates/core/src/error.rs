use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {needed} agents, got {got}")]
    NotEnoughAgents { needed: usize, got: usize },

    #[error("agents {i} and {j} are closer than the degeneracy floor ({distance:e} m)")]
    DegenerateDistance { i: usize, j: usize, distance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ball radius must be positive, got {0}")]
    BadDelta(f64),

    #[error("non-finite state after step {step}")]
    NumericBlowup { step: usize },

    #[error("insufficient data: {field} needs at least {needed} distinct values, got {got}")]
    InsufficientData {
        field: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a failed run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InsufficientData { .. }
                | Error::BadDelta(_)
                | Error::DimensionMismatch { .. }
                | Error::NotEnoughAgents { .. }
                | Error::Json { .. }
        )
    }
}
