use super::QmapError;
use crate::linalg::HermitianMatrix;

pub const PSD_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-8;

/// Two-spin density estimate whose trace is a population fraction in [0, 1]
/// relative to the equilibrium-normalized reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    matrix: HermitianMatrix,
    trace: f64,
}

impl DensityEstimate {
    pub fn new(matrix: HermitianMatrix) -> Result<Self, QmapError> {
        let min_eigenvalue = matrix.min_eigenvalue();
        if min_eigenvalue < -PSD_TOL {
            return Err(QmapError::NotPsd { min_eigenvalue });
        }
        let trace = matrix.trace();
        if !(-TRACE_TOL..=1.0 + TRACE_TOL).contains(&trace) {
            return Err(QmapError::TraceOutOfRange { trace });
        }
        Ok(Self { matrix, trace })
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: HermitianMatrix::zeros(dim), trace: 0.0 }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}
