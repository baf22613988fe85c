use std::path::PathBuf;

use rwrp_core::error::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Core(#[from] rwrp_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn config(field: &str, reason: impl Into<String>) -> LabError {
        LabError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> LabError {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration errors, 3 for resource caps, 4 for statistical
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 2,
            LabError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Resource => 3,
                ErrorClass::Statistical => 4,
            },
            LabError::Io { .. } | LabError::Json(_) | LabError::Csv(_) => 1,
        }
    }
}
