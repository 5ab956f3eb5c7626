use std::ops::Range;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// The variants are grouped so a front end can map them onto stable exit
/// codes: see [`Error::class`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("missing {what}: {}", ids.join(", "))]
    Missing { what: &'static str, ids: Vec<String> },

    #[error("sentiment provider `{provider}` failed on records {}..{}: {message}", range.start, range.end)]
    Provider {
        provider: String,
        range: Range<usize>,
        message: String,
    },

    #[error("encoder `{0}` is not available")]
    EncoderUnavailable(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse error classes used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or unreadable input data.
    Validation,
    /// A prerequisite artifact (cache entry, checkpoint, data file) is absent.
    MissingDependency,
    Internal,
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Provider failures are transient and may be retried.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Provider { .. })
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } | Error::Validation(_) | Error::Json { .. } => {
                ErrorClass::Validation
            }
            Error::Io { .. } => ErrorClass::Validation,
            Error::Missing { .. } | Error::EncoderUnavailable(_) => ErrorClass::MissingDependency,
            Error::Provider { .. } => ErrorClass::Internal,
        }
    }
}
