use fracflow_core::Error as CoreError;

/// Failure of a CLI command, mapped onto the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("comparison failed: {0}")]
    Comparison(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Comparison(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Solver(report) => Self::Solver(report.to_string()),
            CoreError::Numerical(msg) => Self::Solver(msg),
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Config(format!("invalid config: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
