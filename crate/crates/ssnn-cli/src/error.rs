use std::path::Path;

/// CLI failure classes; each maps to its own exit status so scripts can
/// tell a bad config from a bad file from a diverged run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("divergence: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Parse { .. } => 3,
            CliError::Diverged(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

impl From<ssnn::Error> for CliError {
    fn from(e: ssnn::Error) -> Self {
        match e {
            ssnn::Error::Config(m) => CliError::Config(m),
            ssnn::Error::Dimension(m) => CliError::Config(m),
            ssnn::Error::NonFinite(w) => CliError::Diverged(format!("non-finite {w}")),
            ssnn::Error::Diverged { step } => {
                CliError::Diverged(format!("simulation diverged at step {step}"))
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
