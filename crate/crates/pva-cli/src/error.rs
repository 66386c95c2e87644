//! Error type carrying the process exit code.

use std::fmt;

/// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 I/O.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Numeric,
    Io,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Numeric => 3,
            ExitKind::Io => 4,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            ExitKind::Config => "config",
            ExitKind::Numeric => "numeric",
            ExitKind::Io => "io",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ExitKind::Config, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError { kind: ExitKind::Numeric, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { kind: ExitKind::Io, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // machine-readable error line
        write!(f, "error kind={} message={:?}", self.kind.tag(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<pva_core::Error> for CliError {
    fn from(e: pva_core::Error) -> Self {
        use pva_core::Error::*;
        match e {
            QuadratureNotConverged { .. } | DerivativeNotConverged { .. } => {
                CliError::numeric(e.to_string())
            }
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}
