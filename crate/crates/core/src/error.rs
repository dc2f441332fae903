use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate color: all components are zero")]
    DegenerateColor,
    #[error("value {0} outside the unit interval")]
    OutOfRange(f64),
    #[error("degenerate scene: {0}")]
    DegenerateScene(&'static str),
    #[error("division by zero channel: estimate component {0} is not strictly positive")]
    ZeroChannel(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("wavelength grid mismatch: {0}")]
    GridMismatch(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown illuminant: {0}")]
    UnknownIlluminant(String),
    #[error("illuminant {0} carries no spectral power distribution")]
    MissingSpd(String),
    #[error("exposure infeasible: {0}")]
    ExposureInfeasible(String),
    #[error("bad magic: not a calibration table file")]
    BadMagic,
    #[error("unsupported calibration table version {0}")]
    VersionMismatch(u16),
    #[error("truncated calibration table: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed calibration table: {0}")]
    MalformedTable(String),
    #[error("source image must be 8-bit, got {0}-bit")]
    NotEightBit(u8),
    #[error("missing estimates for: {}", .0.join(", "))]
    MissingEstimates(Vec<String>),
    #[error("corpus mismatch: {0}")]
    CorpusMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("png: {0}")]
    Png(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => e.is_io_error(),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
