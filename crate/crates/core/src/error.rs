use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Diagnostic for a malformed flight file; `row` is the 1-based line number.
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        row: u64,
        column: String,
        message: String,
    },

    #[error("{path}: malformed header: {message}")]
    Header { path: PathBuf, message: String },

    #[error("{path}: line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("empty series")]
    EmptySeries,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    #[error("both classes must be present")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("jamming event does not fit the flight: {0}")]
    JamOutOfRange(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model file checksum mismatch (expected {expected}, computed {computed})")]
    ChecksumMismatch { expected: String, computed: String },

    #[error("model file format version {found} is not supported (max major {supported})")]
    UnsupportedVersion { found: String, supported: u32 },

    #[error("flight {flight_id}")]
    Flight {
        flight_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The message of this error followed by each underlying cause, `: `-separated.
    pub fn chain(&self) -> String {
        let mut msg = self.to_string();
        let mut cur: Option<&dyn std::error::Error> = std::error::Error::source(self);
        while let Some(e) = cur {
            msg.push_str(": ");
            msg.push_str(&e.to_string());
            cur = e.source();
        }
        msg
    }

    pub(crate) fn in_flight(self, flight_id: &str) -> Self {
        Error::Flight {
            flight_id: flight_id.to_string(),
            source: Box::new(self),
        }
    }
}
