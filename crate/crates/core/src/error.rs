use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("rectangle {w}x{h} at ({x},{y}) exceeds {frame_w}x{frame_h} frame")]
    OutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        frame_w: usize,
        frame_h: usize,
    },
    #[error("pad target {target_w}x{target_h} is smaller than block {w}x{h}")]
    PadTooSmall {
        w: usize,
        h: usize,
        target_w: usize,
        target_h: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel mismatch: layer expects {expected} input channels, got {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("max-pooling needs at least 2x2 input, got {w}x{h}")]
    PoolTooSmall { w: usize, h: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite weight at index {0}")]
    NonFiniteWeight(usize),
    #[error("weight manifest: {0}")]
    Manifest(String),

    #[error("empty candidate list")]
    EmptyCandidates,
    #[error("normalized feature distortion missing for {0:?}")]
    MissingNormalized(crate::distortion::DistortionKind),
    #[error("feature-based distortion requires a network")]
    MissingNetwork,

    #[error("QP {0} outside [0, 51]")]
    QpOutOfRange(i32),
    #[error("unsupported transform size {w}x{h}")]
    UnsupportedSize { w: usize, h: usize },
    #[error("malformed bitstream: {0}")]
    Malformed(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("region too large for exhaustive enumeration: {0}")]
    RegionTooLarge(String),

    #[error("need 4 points per curve, got {0}")]
    TooFewPoints(usize),
    #[error("no overlap between the quality ranges of the two curves")]
    NoOverlap,
    #[error("invalid RD curve: {0}")]
    InvalidCurve(String),
    #[error("line {line}: {msg}")]
    CsvRow { line: u64, msg: String },
    #[error("no data rows in {0}")]
    NoDataRows(PathBuf),
    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("empty corpus: no .pgm files in {0}")]
    EmptyCorpus(PathBuf),
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
