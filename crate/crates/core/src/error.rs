use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("raster shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported PNG {property}: {found}")]
    Format {
        path: PathBuf,
        property: &'static str,
        found: String,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("pool kernel {kernel_h}x{kernel_w} does not fit a {height}x{width} raster")]
    DegeneratePool {
        kernel_h: usize,
        kernel_w: usize,
        height: usize,
        width: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid target size {height}x{width}: {reason}")]
    InvalidTarget {
        height: usize,
        width: usize,
        reason: &'static str,
    },

    #[error("catalog index {index} out of range (catalog has {len} entries)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("curriculum selection is empty")]
    EmptySelection,

    #[error("invalid curriculum plan: {0}")]
    InvalidPlan(String),

    #[error("scheduler already finished the curriculum")]
    SchedulerFinished,

    #[error("loss value {0} is not a finite non-negative number")]
    InvalidLoss(f64),

    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { step: u64, loss: f64 },

    #[error("no valid ground-truth pixels to evaluate")]
    EmptyEvaluation,

    #[error("non-finite prediction value at pixel {0}")]
    NonFinitePrediction(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
