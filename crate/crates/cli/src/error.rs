//! CLI error categories and their exit codes.

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) | CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Config(_) => "config",
            CliError::Guard(_) => "guard",
            CliError::Internal(_) => "internal",
        }
    }

    /// One JSON object on a single line, for standard error.
    pub fn to_json_line(&self) -> String {
        let line = ErrorLine { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&line).expect("error line serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("io: {e}"))
    }
}

impl From<dcf_core::report::ReportError> for CliError {
    fn from(e: dcf_core::report::ReportError) -> Self {
        CliError::Internal(e.to_string())
    }
}
