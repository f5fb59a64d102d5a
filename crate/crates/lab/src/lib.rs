//! Scenario orchestration, artifact formats and presets for the `crflow`
//! command line.

pub mod config;
pub mod output;
pub mod presets;
pub mod report;
pub mod scenario;

pub use config::ScenarioConfig;
pub use report::{Check, CheckStatus, Report};

/// Errors of the lab layer, mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error{}: {message}", if field.is_empty() { String::new() } else { format!(" in `{field}`") })]
    Config { field: String, message: String },

    #[error("runtime abort: {0}")]
    Runtime(#[from] crflow::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 2,
            LabError::Runtime(_) | LabError::Io(_) => 3,
        }
    }
}

/// Exit code when every enabled check passed or some failed.
pub fn verdict_code(pass: bool) -> i32 {
    if pass {
        0
    } else {
        1
    }
}
