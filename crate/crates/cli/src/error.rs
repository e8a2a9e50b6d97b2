use std::io;
use std::path::{Path, PathBuf};

use ordsel::error::{Error, SortError};
use serde::Serialize;

/// A failure with its exit code and, where known, the file it concerns.
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Usage,
    Validation,
    Io,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage | Kind::Validation => 1,
            Kind::Io => 2,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    code: Kind,
    message: &'a str,
    path: Option<String>,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            message: message.into(),
            path: None,
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        Self {
            kind: Kind::Io,
            message: err.to_string(),
            path: Some(path.to_owned()),
        }
    }

    pub fn at(mut self, path: &Path) -> Self {
        if self.path.is_none() {
            self.path = Some(path.to_owned());
        }
        self
    }

    /// Single-line JSON for standard error.
    pub fn to_json(&self) -> String {
        let report = Report {
            code: self.kind,
            message: &self.message,
            path: self.path.as_ref().map(|p| p.display().to_string()),
        };
        serde_json::to_string(&report).expect("error report serializes")
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let message = err.to_string();
        match err {
            Error::Io { path, .. } => Self {
                kind: Kind::Io,
                message,
                path: Some(path),
            },
            Error::Json { path, .. } => Self {
                kind: Kind::Validation,
                message,
                path: Some(path),
            },
            Error::Sort(e) => e.into(),
            _ => Self::validation(message),
        }
    }
}

impl From<SortError> for CliError {
    fn from(err: SortError) -> Self {
        let kind = match err {
            SortError::Io(_) => Kind::Io,
            _ => Kind::Validation,
        };
        Self {
            kind,
            message: err.to_string(),
            path: None,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        let kind = if err.is_io_error() { Kind::Io } else { Kind::Validation };
        Self {
            kind,
            message: err.to_string(),
            path: None,
        }
    }
}

impl From<ordsel::error::PrefixError> for CliError {
    fn from(err: ordsel::error::PrefixError) -> Self {
        Self::validation(err.to_string())
    }
}

impl From<ordsel::error::ValidationError> for CliError {
    fn from(err: ordsel::error::ValidationError) -> Self {
        Self::validation(err.to_string())
    }
}
