use std::path::PathBuf;

use pcp_core::signals::ValidationReport;

use crate::pipeline::{ProbeRun, Stage};

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
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
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("scenario: {0}")]
    Scenario(#[source] pcp_core::Error),
    #[error("probe design fails {}", .0.binding.as_deref().unwrap_or("its checks"))]
    Validation(ValidationReport),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: pcp_core::Error,
        /// Everything produced before the failure.
        partial: Box<ProbeRun>,
    },
    #[error("runs are not comparable: {0}")]
    Mismatch(String),
}

impl ProbeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ProbeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        ProbeError::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = ProbeError> = std::result::Result<T, E>;
