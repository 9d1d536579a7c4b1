use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate reference: reference power must be positive (got {0})")]
    DegenerateReference(String),

    #[error("negative power: {0}")]
    NegativePower(String),

    #[error("trial {trial}: {period} window [{start}, {end}) exceeds recording of {len} samples")]
    TruncatedTrial {
        trial: usize,
        period: String,
        start: i64,
        end: i64,
        len: usize,
    },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("invalid band ({lo_hz}, {hi_hz}) Hz at fs = {fs} Hz")]
    InvalidBand { lo_hz: f64, hi_hz: f64, fs: f64 },

    #[error("filter design infeasible: {0}")]
    Design(String),

    #[error("empty span")]
    EmptySpan,

    #[error("span [{start}, {end}) outside signal of length {len}")]
    SpanOutOfRange { start: usize, end: usize, len: usize },

    #[error("window of {window} samples is shorter than the {segment}-sample spectral segment")]
    WindowTooShort { window: usize, segment: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no reactive band found for channel {0}")]
    NoReactiveBand(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("all trials invalid; nothing to report")]
    EmptyReport,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    /// Violated internal invariant (a bug, not a user error).
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
