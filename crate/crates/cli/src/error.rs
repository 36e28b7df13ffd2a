use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Reading or writing files.
    Io(String),
    /// Bad environment configuration.
    Environment(String),
    /// Invalid input data or a model-level failure.
    Domain(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn domain(e: impl fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Environment(_) => 1,
            CliError::Domain(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Environment(_) => "environment",
            CliError::Domain(_) => "domain",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Environment(m) | CliError::Domain(m) => m,
        }
    }

    /// Single-line JSON record for standard error.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.message() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}
