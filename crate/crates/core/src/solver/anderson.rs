use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

/// Type-II Anderson extrapolation for a fixed-point map w ↦ f(w).
pub(crate) struct Anderson {
    memory: usize,
    dg: VecDeque<DVector<f64>>,
    df: VecDeque<DVector<f64>>,
    last: Option<(DVector<f64>, DVector<f64>)>,
}

impl Anderson {
    pub(crate) fn new(memory: usize) -> Self {
        Self { memory, dg: VecDeque::new(), df: VecDeque::new(), last: None }
    }

    pub(crate) fn reset(&mut self) {
        self.dg.clear();
        self.df.clear();
        self.last = None;
    }

    /// Records g = w − f(w) and f(w); returns the extrapolated next iterate.
    pub(crate) fn push(&mut self, g: &DVector<f64>, f: &DVector<f64>) -> Option<DVector<f64>> {
        if self.memory == 0 {
            return None;
        }
        if let Some((pg, pf)) = self.last.take() {
            self.dg.push_back(g - pg);
            self.df.push_back(f - pf);
            if self.dg.len() > self.memory {
                self.dg.pop_front();
                self.df.pop_front();
            }
        }
        self.last = Some((g.clone(), f.clone()));
        if self.dg.is_empty() {
            return None;
        }
        let m = self.dg.len();
        let dg = DMatrix::from_columns(&self.dg.iter().cloned().collect::<Vec<_>>());
        let gram = dg.tr_mul(&dg);
        let reg = 1e-10 * (0..m).map(|i| gram[(i, i)]).sum::<f64>().max(f64::MIN_POSITIVE);
        let gram = gram + DMatrix::identity(m, m) * reg;
        let gamma = gram.cholesky()?.solve(&dg.tr_mul(g));
        let mut out = f.clone();
        for (col, gi) in self.df.iter().zip(gamma.iter()) {
            out.axpy(-gi, col, 1.0);
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerates_linear_contraction() {
        let a = DMatrix::from_row_slice(3, 3, &[0.99, 0.0, 0.0, 0.0, 0.95, 0.01, 0.0, 0.0, 0.9]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let fixed = (DMatrix::identity(3, 3) - &a).lu().solve(&b).unwrap();
        let mut aa = Anderson::new(5);
        let mut w = DVector::zeros(3);
        for _ in 0..20 {
            let f = &a * &w + &b;
            let g = &w - &f;
            w = aa.push(&g, &f).unwrap_or(f);
        }
        assert!((w - fixed).amax() < 1e-8);
    }
}
