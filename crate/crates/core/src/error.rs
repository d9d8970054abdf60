use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the pipeline.
///
/// Variants are grouped by how a caller is expected to react: `InvalidInput`
/// and `Shape` are contract violations by the caller, `Format` and `Io` come
/// from files on disk, and `Rejected` marks data that failed a quality gate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate envelope at sample {index}: upper {upper} <= lower {lower}")]
    DegenerateEnvelope {
        index: usize,
        upper: f64,
        lower: f64,
    },

    #[error("insufficient peaks: found {found}, need at least {needed}")]
    InsufficientPeaks { found: usize, needed: usize },

    #[error("record rejected: {0}")]
    Rejected(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the data on disk or in memory rather than by
    /// how an operation was called.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Io { .. }
                | Error::Rejected(_)
                | Error::InsufficientPeaks { .. }
                | Error::DegenerateEnvelope { .. }
        )
    }

    /// Short stable name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Shape(_) => "shape",
            Error::DegenerateEnvelope { .. } => "degenerate_envelope",
            Error::InsufficientPeaks { .. } => "insufficient_peaks",
            Error::Rejected(_) => "rejected",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }
}
