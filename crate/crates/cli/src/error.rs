use qpt_core::analysis::AnalysisError;
use qpt_core::nmr::NmrError;
use qpt_core::qmap::QmapError;
use qpt_core::tomography::{DatasetError, TomographyError};
use serde_json::json;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {message}")]
    Validation { stage: &'static str, message: String },
    #[error("{stage}: {message}")]
    Solver { stage: &'static str, message: String },
    #[error("{stage}: {message}")]
    Io { stage: &'static str, message: String },
}

impl CliError {
    pub fn validation(stage: &'static str, message: impl Into<String>) -> Self {
        Self::Validation { stage, message: message.into() }
    }

    pub fn io(stage: &'static str, path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io { stage, message: format!("{}: {err}", path.display()) }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation { .. } => 2,
            Self::Solver { .. } => 3,
            Self::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Validation { .. } => "validation",
            Self::Solver { .. } => "solver",
            Self::Io { .. } => "io",
        }
    }

    pub fn stage(&self) -> &'static str {
        match self {
            Self::Validation { stage, .. } | Self::Solver { stage, .. } | Self::Io { stage, .. } => stage,
        }
    }

    /// One-line JSON for stderr.
    pub fn summary(&self) -> String {
        let message = match self {
            Self::Validation { message, .. } | Self::Solver { message, .. } | Self::Io { message, .. } => message,
        };
        json!({
            "status": "error",
            "kind": self.kind(),
            "stage": self.stage(),
            "exit_code": self.exit_code(),
            "message": message,
        })
        .to_string()
    }

    pub fn from_tomography(stage: &'static str, err: TomographyError) -> Self {
        match err {
            TomographyError::Dataset(_) | TomographyError::Shape(_) | TomographyError::Qmap(_) => {
                Self::validation(stage, err.to_string())
            }
            _ => Self::Solver { stage, message: err.to_string() },
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::validation("ingest", e.to_string())
    }
}

impl From<NmrError> for CliError {
    fn from(e: NmrError) -> Self {
        Self::validation("simulate", e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        Self::validation("analyze", e.to_string())
    }
}

impl From<QmapError> for CliError {
    fn from(e: QmapError) -> Self {
        Self::validation("analyze", e.to_string())
    }
}
