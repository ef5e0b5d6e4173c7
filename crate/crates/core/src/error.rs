use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Reasons an image file could not be decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedHeader,
    TruncatedPayload,
    UnsupportedFormat,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ParseErrorKind::MalformedHeader => "malformed header",
            ParseErrorKind::TruncatedPayload => "truncated payload",
            ParseErrorKind::UnsupportedFormat => "unsupported format",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{kind}: {detail}")]
    Parse {
        kind: ParseErrorKind,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite pixel at index {index} ({context})")]
    NonFinitePixel { index: usize, context: String },

    #[error("numerical abort in stage `{stage}` at iteration {iteration}: non-finite value at index {index}")]
    NumericalAbort {
        stage: &'static str,
        iteration: usize,
        index: usize,
    },

    #[error("mask selects no pixels")]
    EmptyMask,
}

impl Error {
    pub(crate) fn parse(kind: ParseErrorKind, detail: impl Into<String>) -> Self {
        Error::Parse {
            kind,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The parse failure category, if this is a decoding error.
    pub fn parse_kind(&self) -> Option<&ParseErrorKind> {
        match self {
            Error::Parse { kind, .. } => Some(kind),
            _ => None,
        }
    }
}
