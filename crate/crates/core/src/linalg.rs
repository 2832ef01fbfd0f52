use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max asymmetry {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let deviation = max_asymmetry(&m);
        if deviation > HERMITIAN_TOL {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Returns (m + m†)/2 without checking how far `m` was from Hermitian.
    pub fn symmetrized(m: CMatrix) -> Self {
        assert!(m.is_square(), "symmetrized requires a square matrix");
        let h = (&m + m.adjoint()) * c(0.5, 0.0);
        Self { m: h }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self { m: CMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) }) }
    }

    /// Rank-one projector |ψ⟩⟨ψ| (unnormalized if ψ is).
    pub fn outer(psi: &DVector<C64>) -> Self {
        Self::symmetrized(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * c(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// Re tr(self · other), the real Hilbert–Schmidt pairing.
    pub fn inner(&self, other: &Self) -> f64 {
        self.m.iter().zip(other.m.transpose().iter()).map(|(a, b)| (a * b).re).sum()
    }

    /// Re tr(self · op) for an arbitrary (possibly non-Hermitian) operator.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (&self.m * op).trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn eigen(&self) -> SymmetricEigen<C64, nalgebra::Dyn> {
        SymmetricEigen::new(self.m.clone())
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut ev = self.m.clone().symmetric_eigenvalues();
        ev.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Orthonormal real coordinates: diagonal entries, then √2·Re and √2·Im
    /// of each upper off-diagonal entry in row-major order.
    pub fn coords(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.push(self.m[(i, i)].re);
        }
        let r2 = std::f64::consts::SQRT_2;
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(r2 * self.m[(i, j)].re);
                out.push(r2 * self.m[(i, j)].im);
            }
        }
        out
    }

    pub fn from_coords(dim: usize, x: &[f64]) -> Self {
        assert_eq!(x.len(), dim * dim, "coordinate vector has wrong length");
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = c(x[i], 0.0);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut p = dim;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let z = c(h * x[p], h * x[p + 1]);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                p += 2;
            }
        }
        Self { m }
    }
}

/// Frobenius-nearest PSD matrix: eigendecompose and clip negative eigenvalues.
pub fn project_psd(m: &HermitianMatrix) -> HermitianMatrix {
    let eig = m.eigen();
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        return m.clone();
    }
    let n = m.dim();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (&v * v.adjoint()) * c(lam, 0.0);
        }
    }
    HermitianMatrix::symmetrized(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::I, Axis::X, Axis::Y, Axis::Z];
    pub const XYZ: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn symbol(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

pub fn pauli(a: Axis) -> CMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match a {
        Axis::I => CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        Axis::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

/// σ_a ⊗ σ_b on the two-spin space, first factor is the proton.
pub fn pauli2(a: Axis, b: Axis) -> CMatrix {
    pauli(a).kronecker(&pauli(b))
}

/// Row-major vectorization: entry (i, j) lands at index i·n + j.
pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    let (r, cols) = m.shape();
    DVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> CMatrix {
    assert_eq!(v.len(), n * n, "vector length does not match dimension");
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn herm_from(vals: &[f64], n: usize) -> HermitianMatrix {
        HermitianMatrix::from_coords(n, &vals[..n * n])
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]);
        assert!(matches!(HermitianMatrix::new(m), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn project_psd_clips_negative_part() {
        let m = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let p = project_psd(&m);
        assert_abs_diff_eq!(p.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.matrix()[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pauli_algebra() {
        let xy = pauli(Axis::X) * pauli(Axis::Y);
        assert_abs_diff_eq!((xy - pauli(Axis::Z) * c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vectorize_is_row_major() {
        let m = CMatrix::from_fn(2, 2, |i, j| c((2 * i + j) as f64, 0.0));
        let v = vectorize(&m);
        for k in 0..4 {
            assert_eq!(v[k].re, k as f64);
        }
        assert_eq!(unvectorize(&v, 2), m);
    }

    proptest! {
        #[test]
        fn coords_are_isometric(a in prop::collection::vec(-1.0f64..1.0, 16), b in prop::collection::vec(-1.0f64..1.0, 16)) {
            let x = herm_from(&a, 4);
            let y = herm_from(&b, 4);
            let direct = x.inner(&y);
            let via: f64 = x.coords().iter().zip(y.coords()).map(|(p, q)| p * q).sum();
            prop_assert!((direct - via).abs() < 1e-12);
            prop_assert!((HermitianMatrix::from_coords(4, &x.coords()).sub(&x)).frobenius_norm() < 1e-14);
        }

        #[test]
        fn psd_projection_is_psd_and_idempotent(a in prop::collection::vec(-1.0f64..1.0, 16)) {
            let p = project_psd(&herm_from(&a, 4));
            prop_assert!(p.min_eigenvalue() > -1e-12);
            prop_assert!(project_psd(&p).sub(&p).frobenius_norm() < 1e-12);
        }
    }
}
