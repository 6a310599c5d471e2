use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch in {context}: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("length mismatch in {context}: expected {expected}, got {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid NUFFT plan: {0}")]
    InvalidPlan(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is zero: power iteration collapsed")]
    ZeroOperator,

    #[error("normalized cross-correlation undefined: magnitude image is constant")]
    ConstantMagnitude,

    #[error("image size {rows}x{cols} is not divisible by 2^{levels}")]
    NotDivisible {
        rows: usize,
        cols: usize,
        levels: usize,
    },

    #[error("malformed wavelet pyramid: {0}")]
    InvalidPyramid(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported sample type code {0}")]
    UnsupportedSampleType(u16),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("payload has {found} bytes but the header declares {expected}")]
    TrailingData { expected: usize, found: usize },

    #[error("metadata is missing required key {0:?}")]
    MissingMetadata(&'static str),

    #[error("malformed metadata: {0}")]
    Metadata(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
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

    /// Attaches the file a decoding error came from.
    pub(crate) fn in_file(path: impl Into<PathBuf>, source: Error) -> Self {
        Error::Decode {
            path: path.into(),
            source: Box::new(source),
        }
    }
}
