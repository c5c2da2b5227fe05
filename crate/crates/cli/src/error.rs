use thiserror::Error;

use gnslab_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Serialize(String),
}

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for bad input, 3 for resource ceilings, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::Parse(_)
                | CoreError::InvalidParameter(_)
                | CoreError::InvalidGrid(_)
                | CoreError::InvalidKernel(_)
                | CoreError::Unstable(_)
                | CoreError::UnderResolved { .. } => 2,
                CoreError::Ceiling(_) => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}
