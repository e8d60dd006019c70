use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] shtsynth::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: {msg}")]
    Parse { what: &'static str, msg: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn parse(what: &'static str, msg: impl Into<String>) -> Self {
        CliError::Parse { what, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Module the failure is attributed to in the `error:` line.
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.module(),
            _ => "cli",
        }
    }

    /// Single-line, machine-parsable form: `error: <module>: <message>`.
    pub fn report_line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("error: {}: {}", self.module(), msg)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
