use super::{DensityEstimate, OperatorBasis, QmapError};
use crate::linalg::{c, max_asymmetry, unvectorize, vectorize, CMatrix, HermitianMatrix, LinalgError};

pub const HERMITICITY_PRESERVING_TOL: f64 = 1e-8;
pub const KRAUS_EIGEN_CUTOFF: f64 = 1e-10;
pub const NON_CP_REJECT: f64 = -1e-6;
const CP_TOL: f64 = 1e-8;

fn isqrt(n: usize) -> usize {
    let d = (n as f64).sqrt().round() as usize;
    assert_eq!(d * d, n, "dimension {n} is not a perfect square");
    d
}

/// Liouville matrix acting on row-major vectorized operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperoperatorMatrix {
    pub matrix: CMatrix,
}

impl SuperoperatorMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, QmapError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() }.into());
        }
        isqrt(matrix.nrows());
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: CMatrix::identity(d * d, d * d) }
    }

    /// Dimension of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        isqrt(self.matrix.nrows())
    }

    /// Composition `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SuperoperatorMatrix) -> SuperoperatorMatrix {
        Self { matrix: &self.matrix * &first.matrix }
    }
}

/// Dynamical (Choi) matrix; PSD iff the map is completely positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    matrix: HermitianMatrix,
}

impl ChoiMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self, QmapError> {
        let min_eigenvalue = matrix.min_eigenvalue();
        if min_eigenvalue < -CP_TOL {
            return Err(QmapError::NotPsd { min_eigenvalue });
        }
        Ok(Self { matrix })
    }

    /// Wraps a Hermitian matrix without the complete-positivity check, for
    /// diagnosing maps that may not be CP.
    pub fn from_hermitian(matrix: HermitianMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn hilbert_dim(&self) -> usize {
        isqrt(self.matrix.dim())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale(s) }
    }

    pub fn to_superoperator(&self) -> SuperoperatorMatrix {
        SuperoperatorMatrix { matrix: reshuffle_matrix(self.matrix.matrix()) }
    }
}

/// χ matrix of coefficients in a named operator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    pub matrix: HermitianMatrix,
    pub basis_id: String,
}

impl ChiMatrix {
    pub fn new(matrix: HermitianMatrix, basis_id: &str) -> Result<Self, QmapError> {
        let min_eigenvalue = matrix.min_eigenvalue();
        if min_eigenvalue < -CP_TOL {
            return Err(QmapError::NotPsd { min_eigenvalue });
        }
        Ok(Self { matrix, basis_id: basis_id.to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
    pub weights: Vec<f64>,
}

impl KrausSet {
    /// Σ w_i K_i ρ K_i†.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.nrows();
        let mut out = CMatrix::zeros(d, d);
        for (k, &w) in self.operators.iter().zip(&self.weights) {
            out += (k * rho * k.adjoint()) * c(w, 0.0);
        }
        out
    }
}

/// Index permutation X[(m n),(μ ν)] = Y[(m μ),(n ν)]; an involution.
pub fn reshuffle_matrix(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let d = isqrt(n);
    CMatrix::from_fn(n, n, |row, col| {
        let (m, nn) = (row / d, row % d);
        let (mu, nu) = (col / d, col % d);
        x[(m * d + mu, nn * d + nu)]
    })
}

pub fn reshuffle(superop: &SuperoperatorMatrix) -> ChoiMatrix {
    let d = reshuffle_matrix(&superop.matrix);
    ChoiMatrix::from_hermitian(HermitianMatrix::symmetrized(d))
}

fn check_basis(chi: &ChiMatrix, basis: &OperatorBasis) -> Result<(), QmapError> {
    if chi.basis_id != basis.id {
        return Err(QmapError::BasisMismatch { chi: chi.basis_id.clone(), basis: basis.id.clone() });
    }
    if chi.matrix.dim() != basis.len() {
        return Err(LinalgError::DimensionMismatch { expected: basis.len(), found: chi.matrix.dim() }.into());
    }
    Ok(())
}

/// Σ_ij χ_ij A_i ⊗ conj(A_j), assembled as the reshuffle of V χ V†.
pub fn chi_to_superoperator(chi: &ChiMatrix, basis: &OperatorBasis) -> Result<SuperoperatorMatrix, QmapError> {
    check_basis(chi, basis)?;
    let d = &basis.v * chi.matrix.matrix() * basis.v.adjoint();
    Ok(SuperoperatorMatrix { matrix: reshuffle_matrix(&d) })
}

/// Inverse of `chi_to_superoperator`: χ = V⁻¹ D V⁻†. The result need not be PSD.
pub fn superoperator_to_chi(superop: &SuperoperatorMatrix, basis: &OperatorBasis) -> HermitianMatrix {
    let d = reshuffle_matrix(&superop.matrix);
    HermitianMatrix::symmetrized(&basis.v_inv * d * basis.v_inv.adjoint())
}

/// Applies a Liouville matrix to a state. The output is not required to be
/// a density estimate since arbitrary (non-CP, non-TP) maps are allowed.
pub fn apply_map(superop: &SuperoperatorMatrix, state: &DensityEstimate) -> Result<HermitianMatrix, QmapError> {
    apply_map_to(superop, state.matrix())
}

pub fn apply_map_to(superop: &SuperoperatorMatrix, rho: &HermitianMatrix) -> Result<HermitianMatrix, QmapError> {
    let d = superop.hilbert_dim();
    if rho.dim() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: rho.dim() }.into());
    }
    let out = unvectorize(&(&superop.matrix * vectorize(rho.matrix())), d);
    let deviation = max_asymmetry(&out);
    if deviation > HERMITICITY_PRESERVING_TOL {
        return Err(QmapError::NotHermiticityPreserving { deviation });
    }
    Ok(HermitianMatrix::symmetrized(out))
}

pub fn choi_to_kraus(choi: &ChoiMatrix) -> Result<KrausSet, QmapError> {
    let d = choi.hilbert_dim();
    let eig = choi.matrix().eigen();
    let mut operators = Vec::new();
    let mut weights = Vec::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < NON_CP_REJECT {
            return Err(QmapError::NotCompletelyPositive { eigenvalue: lam });
        }
        if lam > KRAUS_EIGEN_CUTOFF {
            operators.push(unvectorize(&eig.eigenvectors.column(k).into_owned(), d));
            weights.push(lam);
        }
    }
    Ok(KrausSet { operators, weights })
}

pub fn kraus_to_choi(kraus: &KrausSet) -> ChoiMatrix {
    let d = kraus.operators.first().map(|k| k.nrows()).unwrap_or(0);
    let mut out = CMatrix::zeros(d * d, d * d);
    for (k, &w) in kraus.operators.iter().zip(&kraus.weights) {
        let v = vectorize(k);
        out += (&v * v.adjoint()) * c(w, 0.0);
    }
    ChoiMatrix::from_hermitian(HermitianMatrix::symmetrized(out))
}

/// ‖Tr_out D − 𝟙‖_F; Tr_out D equals (Σ K†K)ᵀ.
pub fn tp_deviation(choi: &ChoiMatrix) -> f64 {
    let d = choi.hilbert_dim();
    let m = choi.matrix().matrix();
    let p = CMatrix::from_fn(d, d, |n, nu| (0..d).map(|mm| m[(mm * d + n, mm * d + nu)]).sum());
    (p - CMatrix::identity(d, d)).norm()
}

/// ‖Φ(𝟙) − 𝟙‖_F; Φ(𝟙) equals Σ K K†.
pub fn unitality_deviation(choi: &ChoiMatrix) -> f64 {
    let d = choi.hilbert_dim();
    let m = choi.matrix().matrix();
    let p = CMatrix::from_fn(d, d, |mm, mu| (0..d).map(|n| m[(mm * d + n, mu * d + n)]).sum());
    (p - CMatrix::identity(d, d)).norm()
}

pub fn trace_distance(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    0.5 * a.sub(b).eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}
