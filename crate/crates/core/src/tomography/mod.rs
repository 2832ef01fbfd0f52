mod dataset;
mod pipeline;
mod process;
mod state;

pub use dataset::{
    channel_index, channel_observable, channel_observables, Dataset, DatasetError, SignalRecord, CHANNELS,
    CHANNEL_AXES, PREPARATION_COUNT, SIGNAL_BOUND,
};
pub use pipeline::{run_full_reconstruction, Reconstruction, ReconstructionConfig};
pub use process::{process_tomography, ProcessEstimate};
pub use state::{state_tomography_pass1, state_tomography_pass2, StateTomographyResult};

use crate::qmap::QmapError;
use crate::solver::{SolveStatus, SolverError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Problem(#[from] SolverError),
    #[error("{stage} solve for index {index} ended with status {status:?}")]
    Solver { stage: &'static str, index: usize, status: SolveStatus },
    #[error("preparation {prep}: {source}")]
    InvalidState { prep: usize, source: QmapError },
    #[error(transparent)]
    Qmap(#[from] QmapError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("worker pool: {0}")]
    Threads(String),
}
