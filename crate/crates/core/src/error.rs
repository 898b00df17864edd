use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RegError>;

#[derive(Debug, Error)]
pub enum RegError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("degenerate region on axis {axis}: {start}..{end}")]
    DegenerateRegion { axis: usize, start: i64, end: i64 },

    #[error("pyramid too deep for volume: level dims {dims:?}")]
    PyramidTooDeep { dims: [usize; 3] },

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("landmark sets are not paired: {0}")]
    UnpairedLandmarks(String),

    #[error("weak supervision requires landmarks")]
    MissingLandmarks,

    #[error("expected {expected} pyramid levels, got {got}")]
    MissingLevel { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ensemble weights must sum to 1 (got {0})")]
    WeightSum(f64),

    #[error("infeasible synthetic setup: {0}")]
    Infeasible(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RegError {
    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        RegError::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RegError::Io {
            path: path.into(),
            source,
        }
    }
}
