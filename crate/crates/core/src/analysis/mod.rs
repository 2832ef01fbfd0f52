mod fit;
mod series;
mod table;

pub use fit::{default_initialization, fit_exponential, FitResult, MAX_FIT_ITERATIONS, PARAMETER_TOLERANCE};
pub use series::{
    average_magnetization, evolved_states, map_property_series, trace_distance_series, DecaySeries,
};
pub use table::{relaxation_series, relaxation_table, RelaxationRow, TABLE_ROWS};

use crate::qmap::QmapError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Qmap(#[from] QmapError),
}
