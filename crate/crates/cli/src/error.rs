use std::path::PathBuf;

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{flag}: {constraint}")]
    Flag {
        flag: &'static str,
        constraint: String,
    },

    #[error(transparent)]
    Core(#[from] jcm_rg::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Single-line JSON description for stderr.
    pub fn to_json(&self) -> Value {
        match self {
            CliError::Flag { flag, constraint } => json!({
                "error": "invalid_flag",
                "flag": flag,
                "constraint": constraint,
                "message": self.to_string(),
            }),
            CliError::Core(jcm_rg::Error::InvalidParameter {
                name,
                constraint,
                value,
            }) => json!({
                "error": "invalid_parameter",
                "flag": format!("--{}", name.replace('_', "-")),
                "constraint": constraint,
                "value": value,
                "message": self.to_string(),
            }),
            CliError::Core(e) => json!({ "error": "computation", "message": e.to_string() }),
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => {
                json!({ "error": "io", "message": self.to_string() })
            }
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Flag { .. } | CliError::Core(jcm_rg::Error::InvalidParameter { .. }) => 2,
            _ => 1,
        }
    }
}
