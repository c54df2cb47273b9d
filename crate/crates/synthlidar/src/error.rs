//! Failure categories and their process exit codes.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad flags, config or input files.
    Usage,
    /// Inconsistent or missing data while running.
    Data,
    /// A check ran but missed its tolerance.
    Tolerance,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Usage => 1,
            ExitKind::Data => 2,
            ExitKind::Tolerance => 3,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for Failure {}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Usage,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Data,
            error: error.into(),
        }
    }

    pub fn tolerance(msg: impl fmt::Display) -> Self {
        Self {
            kind: ExitKind::Tolerance,
            error: anyhow::anyhow!("{msg}"),
        }
    }
}

pub type CmdResult<T> = Result<T, Failure>;

/// Tags errors with an exit category.
pub trait Classify<T> {
    fn usage_err(self) -> CmdResult<T>;
    fn data_err(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage_err(self) -> CmdResult<T> {
        self.map_err(Failure::usage)
    }

    fn data_err(self) -> CmdResult<T> {
        self.map_err(Failure::data)
    }
}
