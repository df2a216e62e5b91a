use std::fmt;
use std::io;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("file is empty; expected a header line")]
    MissingHeader,
    #[error("expected a `{expected}` file, found `{found}`")]
    WrongFormat { expected: String, found: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("{0}")]
    Toml(String),
}

impl FormatError {
    pub(crate) fn json(line: usize) -> impl Fn(serde_json::Error) -> Self {
        move |source| Self::Json { line, source }
    }

    pub(crate) fn invalid(line: usize, msg: impl fmt::Display) -> Self {
        Self::Invalid {
            line,
            msg: msg.to_string(),
        }
    }
}

/// Failure classes of the command-line driver, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or inconsistent inputs, bad flags. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// The computation itself failed. Exit code 1.
    #[error("{0}")]
    Numerical(String),
    /// Outputs were written but the solver ran out of iterations. Exit code 3.
    #[error("solver did not converge within the iteration budget")]
    NotConverged,
}

impl CliError {
    pub fn input(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        Self::Input(format!("{context}: {err}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Numerical(_) => 1,
            Self::Input(_) => 2,
            Self::NotConverged => 3,
        })
    }
}
