mod channel;
mod mub;
mod state;

pub use channel::{
    apply_map, apply_map_to, chi_to_superoperator, choi_to_kraus, kraus_to_choi, reshuffle, reshuffle_matrix,
    superoperator_to_chi, tp_deviation, trace_distance, unitality_deviation, ChiMatrix, ChoiMatrix,
    KrausSet, SuperoperatorMatrix, HERMITICITY_PRESERVING_TOL, KRAUS_EIGEN_CUTOFF, NON_CP_REJECT,
};
pub use mub::{
    build_mub_preparations, build_operator_basis, OperatorBasis, PreparationSet, MUB_TRIPLES,
    OPERATOR_BASIS_ID,
};
pub use state::DensityEstimate;

use crate::linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmapError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("trace {trace:e} outside [0, 1]")]
    TraceOutOfRange { trace: f64 },
    #[error("map does not preserve Hermiticity (asymmetry {deviation:e})")]
    NotHermiticityPreserving { deviation: f64 },
    #[error("Choi matrix is not completely positive (eigenvalue {eigenvalue:e})")]
    NotCompletelyPositive { eigenvalue: f64 },
    #[error("operator basis is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("basis mismatch: chi uses `{chi}`, supplied basis is `{basis}`")]
    BasisMismatch { chi: String, basis: String },
}
