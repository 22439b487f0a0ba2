use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),

    /// Text formats report a 1-based line, binary formats a byte offset.
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("plugin failed on patch {patch}: {message}")]
    Plugin { patch: usize, message: String },

    #[error("unsupported format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Byte(usize),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte {b}"),
        }
    }
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Argument,
    Io,
    Numeric,
    Plugin,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Stream(_) | Error::Parse { .. } | Error::Format(_) => {
                ErrorKind::Io
            }
            Error::OutOfRange { .. } | Error::SizeMismatch(_) | Error::InvalidParameter(_) => {
                ErrorKind::Argument
            }
            Error::Empty(_) | Error::Degenerate(_) | Error::NonFinite(_) | Error::Numerical(_) => {
                ErrorKind::Numeric
            }
            Error::Plugin { .. } => ErrorKind::Plugin,
        }
    }

    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        range: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
