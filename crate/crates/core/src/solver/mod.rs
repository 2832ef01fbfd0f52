mod admm;
mod anderson;
mod interior;
mod problem;

pub use admm::{solve, SolveStatus, Solution, SolverConfig, SolverError, SolverMethod};
pub use problem::{AffineFunctional, ConicProblem, LinearInequality, PsdImage, ResidualConstraint};

use crate::linalg::HermitianMatrix;

/// Frobenius-nearest PSD matrix.
pub fn project_psd(m: &HermitianMatrix) -> HermitianMatrix {
    crate::linalg::project_psd(m)
}
