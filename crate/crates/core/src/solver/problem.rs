use crate::linalg::{CMatrix, HermitianMatrix};
use nalgebra::DMatrix;

/// Σ_v ⟨W_v, X_v⟩ + constant, with Hermitian weights so the value is real.
#[derive(Debug, Clone, Default)]
pub struct AffineFunctional {
    pub terms: Vec<(usize, HermitianMatrix)>,
    pub constant: f64,
}

impl AffineFunctional {
    pub fn single(variable: usize, weight: HermitianMatrix) -> Self {
        Self { terms: vec![(variable, weight)], constant: 0.0 }
    }

    pub fn trace(variable: usize, dim: usize) -> Self {
        Self::single(variable, HermitianMatrix::identity(dim))
    }

    pub fn evaluate(&self, values: &[HermitianMatrix]) -> f64 {
        self.constant + self.terms.iter().map(|(v, w)| w.inner(&values[*v])).sum::<f64>()
    }
}

/// |functional(X) − observed| ≤ slack[slack].
#[derive(Debug, Clone)]
pub struct ResidualConstraint {
    pub functional: AffineFunctional,
    pub observed: f64,
    pub slack: usize,
}

/// functional(X) ≥ lower.
#[derive(Debug, Clone)]
pub struct LinearInequality {
    pub functional: AffineFunctional,
    pub lower: f64,
}

/// Σ_v L_v · coords(X_v) must be the coordinate vector of a PSD matrix of
/// size `dim`. Each L_v is a (dim² × dim_v²) real matrix in the orthonormal
/// Hermitian coordinates of `HermitianMatrix::coords`.
#[derive(Debug, Clone)]
pub struct PsdImage {
    pub dim: usize,
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl PsdImage {
    /// The image X ↦ T X T† of one variable of size `var_dim`.
    pub fn congruence(variable: usize, var_dim: usize, t: &CMatrix) -> Self {
        let out_dim = t.nrows();
        let n_in = var_dim * var_dim;
        let mut l = DMatrix::zeros(out_dim * out_dim, n_in);
        let mut e = vec![0.0; n_in];
        for k in 0..n_in {
            e[k] = 1.0;
            let h = HermitianMatrix::from_coords(var_dim, &e);
            let img = HermitianMatrix::symmetrized(t * h.matrix() * t.adjoint());
            for (r, val) in img.coords().into_iter().enumerate() {
                l[(r, k)] = val;
            }
            e[k] = 0.0;
        }
        Self { dim: out_dim, terms: vec![(variable, l)] }
    }

    pub fn evaluate(&self, values: &[HermitianMatrix]) -> HermitianMatrix {
        let mut acc = nalgebra::DVector::zeros(self.dim * self.dim);
        for (v, l) in &self.terms {
            acc += l * nalgebra::DVector::from_vec(values[*v].coords());
        }
        HermitianMatrix::from_coords(self.dim, acc.as_slice())
    }
}

/// Linear objective over Hermitian PSD variables and nonnegative slacks.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    pub variable_dims: Vec<usize>,
    pub trace_weights: Vec<HermitianMatrix>,
    pub slack_weights: Vec<f64>,
    pub residual_constraints: Vec<ResidualConstraint>,
    pub psd_images: Vec<PsdImage>,
    pub linear_inequalities: Vec<LinearInequality>,
}

impl ConicProblem {
    /// Adds a PSD variable whose objective weight is `weight`; returns its index.
    pub fn add_variable(&mut self, weight: HermitianMatrix) -> usize {
        self.variable_dims.push(weight.dim());
        self.trace_weights.push(weight);
        self.variable_dims.len() - 1
    }

    pub fn add_slack(&mut self, weight: f64) -> usize {
        self.slack_weights.push(weight);
        self.slack_weights.len() - 1
    }

    /// Adds |functional − observed| ≤ Δ with a fresh slack of the given weight.
    pub fn add_residual(&mut self, functional: AffineFunctional, observed: f64, weight: f64) -> usize {
        let slack = self.add_slack(weight);
        self.residual_constraints.push(ResidualConstraint { functional, observed, slack });
        slack
    }

    pub fn objective(&self, values: &[HermitianMatrix], slacks: &[f64]) -> f64 {
        let vars: f64 = self.trace_weights.iter().zip(values).map(|(w, x)| w.inner(x)).sum();
        let sl: f64 = self.slack_weights.iter().zip(slacks).map(|(w, s)| w * s).sum();
        vars + sl
    }
}
