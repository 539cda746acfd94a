use thiserror::Error;

use finfree_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    /// A precondition on user input; exit code 2.
    #[error("invalid {field}: {message}")]
    Input { field: String, message: String },

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Serialize(String),

    /// Acceptance criteria failed; exit code 1.
    #[error("{0} acceptance criteria failed")]
    Verify(usize),
}

impl CliError {
    pub fn input(field: &str, message: impl Into<String>) -> Self {
        Self::Input {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Attributes a core precondition failure to the flag that supplied it.
    pub fn from_core(field: &str, err: CoreError) -> Self {
        Self::input(field, err.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input { .. } => 2,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Serialize(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Serialize(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
