use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed PPM stream. `context` names the header field or byte offset.
    #[error("ppm decode error at {context}: {message}")]
    PpmDecode { context: String, message: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate interpolant: interpolated {which} vector has zero length at ({x}, {y})")]
    DegenerateInterpolant { which: &'static str, x: f64, y: f64 },

    #[error("channel histogram is empty")]
    EmptyHistogram,

    #[error("no pixel pairs for offset ({dx}, {dy}) in a {width}x{height} image")]
    EmptyPairs {
        dx: i32,
        dy: i32,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("empty index")]
    EmptyIndex,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode {}: {source}", path.display())]
    ImageFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported index version {found} (expected {expected})")]
    IndexVersion { found: u64, expected: u64 },

    #[error("index schema error: {0}")]
    IndexSchema(String),

    #[error("precision is undefined when nothing is retrieved")]
    UndefinedPrecision,

    #[error("recall is undefined when the database holds no relevant images")]
    UndefinedRecall,

    #[error("corpus mismatch: {0}")]
    CorpusMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn ppm(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::PpmDecode {
            context: context.into(),
            message: message.into(),
        }
    }
}
