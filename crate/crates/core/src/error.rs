use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: malformed input at {location}: {message}")]
    Malformed {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("unknown author ids: {}", .0.join(", "))]
    UnknownAuthors(Vec<String>),

    #[error("authors missing from roster: {}", .0.join(", "))]
    MissingFromRoster(Vec<String>),

    #[error("missing category: {0}")]
    MissingCategory(String),

    #[error("component entirely missing: {0}")]
    ComponentMissing(String),

    #[error("team {team}: corpus spans {span_days} day(s), need at least {required}")]
    CorpusTooShort {
        team: String,
        span_days: i64,
        required: u32,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn from_json(path: impl Into<PathBuf>, err: &serde_json::Error) -> Self {
        Error::malformed(
            path,
            format!("line {}, column {}", err.line(), err.column()),
            err.to_string(),
        )
    }

    /// True when the failure comes from the content of an input file rather
    /// than from how the program was invoked.
    pub fn is_malformed_input(&self) -> bool {
        matches!(
            self,
            Error::Malformed { .. } | Error::UnknownAuthors(_) | Error::MissingCategory(_)
        )
    }
}
