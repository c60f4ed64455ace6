use std::path::PathBuf;

use thiserror::Error;

use crate::cnn::CompactCnnModel;
use crate::iqcore::SatId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: satellite id {sat_id} is outside the constellation")]
    UnknownSatellite { line: u64, sat_id: i64 },

    #[error("satellites below the minimum of {min} items for splitting: {sat_ids:?}")]
    InsufficientFrames { min: usize, sat_ids: Vec<SatId> },

    #[error("satellite {sat_id} has {have} images, at least {need} required")]
    InsufficientImages { sat_id: SatId, have: usize, need: usize },

    #[error("satellite {0} is not present in the image set")]
    MissingSatellite(SatId),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bit sequence has odd length {0}")]
    OddBitCount(usize),

    #[error("degenerate constant-power frame: power variance is zero")]
    DegenerateFrame,

    #[error("cannot normalize an all-zero sample group")]
    AllZeroSamples,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("objective became non-finite at epoch {epoch} (value {value})")]
    NonFiniteLoss { epoch: usize, value: f64 },

    #[error("training diverged at epoch {epoch}; last stable checkpoint retained")]
    Diverged {
        epoch: usize,
        checkpoint: Box<CompactCnnModel>,
    },

    #[error("class {0} has no test instances")]
    EmptyClass(SatId),

    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
