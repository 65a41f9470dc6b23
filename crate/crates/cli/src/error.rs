use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("{origin}: {source}")]
    Invalid {
        origin: String,
        #[source]
        source: optomech_core::Error,
    },

    #[error("scenario {scenario}: {source}")]
    Run {
        scenario: String,
        #[source]
        source: optomech_core::Error,
    },

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("{origin}: column {column:?} needs the {needs} output")]
    UnavailableColumn { origin: String, column: String, needs: &'static str },

    #[error("{origin}: {message}")]
    Sweep { origin: String, message: String },
}

impl HarnessError {
    /// Stable identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "io",
            HarnessError::Parse { .. } => "parse",
            HarnessError::Invalid { .. } => "invalid",
            HarnessError::Run { .. } => "run",
            HarnessError::UnknownScenario(_) => "unknown-scenario",
            HarnessError::UnavailableColumn { .. } => "unavailable-column",
            HarnessError::Sweep { .. } => "sweep",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}
