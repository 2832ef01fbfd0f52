use super::anderson::Anderson;
use super::problem::ConicProblem;
use crate::linalg::{project_psd, HermitianMatrix};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub penalty: f64,
    pub adapt_interval: usize,
    pub relaxation: f64,
    /// Record primal + dual residual at every iteration.
    pub record_history: bool,
    /// Anderson extrapolation depth; 0 runs the plain splitting iteration.
    pub anderson_memory: usize,
    pub method: SolverMethod,
}

/// `penalty`, `adapt_interval`, `relaxation` and `anderson_memory` only
/// affect the splitting iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    InteriorPoint,
    Splitting,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            tolerance: 1e-7,
            penalty: 1.0,
            adapt_interval: 100,
            relaxation: 1.6,
            record_history: false,
            anderson_memory: 10,
            method: SolverMethod::InteriorPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub variable_values: Vec<HermitianMatrix>,
    pub slack_values: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

const INFEASIBILITY_EPS: f64 = 1e-5;
const BALANCE_RATIO: f64 = 10.0;

pub(super) struct Segments {
    pub(super) data: std::ops::Range<usize>,
    pub(super) vars: Vec<(std::ops::Range<usize>, usize)>,
    pub(super) images: Vec<(std::ops::Range<usize>, usize)>,
    pub(super) ineq: std::ops::Range<usize>,
    pub(super) len: usize,
}

/// Problem compiled into x ∈ Rⁿ (stacked Hermitian coordinates) with the
/// stacked operator M = [A; I; L_1; …; G] and offsets o, so that every
/// constraint reads Mx − o ∈ C.
pub(super) struct Compiled {
    pub(super) n: usize,
    pub(super) c: DVector<f64>,
    pub(super) a: DMatrix<f64>,
    pub(super) b: DVector<f64>,
    pub(super) w: DVector<f64>,
    pub(super) images: Vec<DMatrix<f64>>,
    pub(super) g: DMatrix<f64>,
    pub(super) h: DVector<f64>,
    pub(super) seg: Segments,
    kkt: Cholesky<f64, Dyn>,
}

fn place(row: &mut [f64], offset: usize, coords: &[f64]) {
    for (k, v) in coords.iter().enumerate() {
        row[offset + k] += v;
    }
}

fn validate(p: &ConicProblem) -> Result<(), SolverError> {
    let nv = p.variable_dims.len();
    if p.trace_weights.len() != nv {
        return Err(SolverError::Malformed("one objective weight per variable is required".into()));
    }
    for (v, (w, &d)) in p.trace_weights.iter().zip(&p.variable_dims).enumerate() {
        if w.dim() != d || d == 0 {
            return Err(SolverError::Malformed(format!("variable {v}: weight dimension {} vs {d}", w.dim())));
        }
    }
    if p.slack_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(SolverError::Malformed("slack weights must be finite and nonnegative".into()));
    }
    let mut used = vec![false; p.slack_weights.len()];
    let check_terms = |terms: &[(usize, HermitianMatrix)]| -> Result<(), SolverError> {
        for (v, w) in terms {
            if *v >= nv || w.dim() != p.variable_dims[*v] {
                return Err(SolverError::Malformed(format!("functional term on variable {v} has wrong shape")));
            }
        }
        Ok(())
    };
    for (i, rc) in p.residual_constraints.iter().enumerate() {
        check_terms(&rc.functional.terms)?;
        if rc.slack >= used.len() {
            return Err(SolverError::Malformed(format!("constraint {i} refers to missing slack {}", rc.slack)));
        }
        if used[rc.slack] {
            return Err(SolverError::Malformed(format!("slack {} is shared by several constraints", rc.slack)));
        }
        used[rc.slack] = true;
        if !rc.observed.is_finite() {
            return Err(SolverError::Malformed(format!("constraint {i} has a non-finite observation")));
        }
    }
    for li in &p.linear_inequalities {
        check_terms(&li.functional.terms)?;
    }
    for (j, img) in p.psd_images.iter().enumerate() {
        for (v, l) in &img.terms {
            if *v >= nv || l.nrows() != img.dim * img.dim || l.ncols() != p.variable_dims[*v].pow(2) {
                return Err(SolverError::Malformed(format!("PSD image {j} has a wrongly shaped term")));
            }
        }
    }
    Ok(())
}

impl Compiled {
    pub(super) fn new(p: &ConicProblem) -> Self {
        let mut var_offsets = Vec::with_capacity(p.variable_dims.len());
        let mut n = 0;
        for &d in &p.variable_dims {
            var_offsets.push(n);
            n += d * d;
        }

        let mut c = DVector::zeros(n);
        for (v, w) in p.trace_weights.iter().enumerate() {
            place(c.as_mut_slice(), var_offsets[v], &w.coords());
        }

        let functional_row = |f: &super::problem::AffineFunctional| {
            let mut row = vec![0.0; n];
            for (v, w) in &f.terms {
                place(&mut row, var_offsets[*v], &w.coords());
            }
            row
        };

        // Residual rows normalized to unit length; the ℓ1 weight absorbs the scale.
        let m = p.residual_constraints.len();
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        let mut w = DVector::zeros(m);
        for (i, rc) in p.residual_constraints.iter().enumerate() {
            let row = functional_row(&rc.functional);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
            for (k, v) in row.iter().enumerate() {
                a[(i, k)] = v * s;
            }
            b[i] = (rc.observed - rc.functional.constant) * s;
            w[i] = p.slack_weights[rc.slack] / s;
        }

        let q = p.linear_inequalities.len();
        let mut g = DMatrix::zeros(q, n);
        let mut h = DVector::zeros(q);
        for (i, li) in p.linear_inequalities.iter().enumerate() {
            let row = functional_row(&li.functional);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
            for (k, v) in row.iter().enumerate() {
                g[(i, k)] = v * s;
            }
            h[i] = (li.lower - li.functional.constant) * s;
        }

        let images: Vec<DMatrix<f64>> = p
            .psd_images
            .iter()
            .map(|img| {
                let mut l = DMatrix::zeros(img.dim * img.dim, n);
                for (v, t) in &img.terms {
                    let off = var_offsets[*v];
                    let mut view = l.columns_mut(off, t.ncols());
                    view += t;
                }
                let norm = l.norm() / (n as f64).sqrt().max(1.0);
                if norm > 0.0 {
                    l /= norm.max(f64::MIN_POSITIVE);
                }
                l
            })
            .collect();

        let mut pos = 0;
        let data = pos..pos + m;
        pos += m;
        let mut vars = Vec::new();
        for &d in &p.variable_dims {
            vars.push((pos..pos + d * d, d));
            pos += d * d;
        }
        let mut img_seg = Vec::new();
        for img in &p.psd_images {
            img_seg.push((pos..pos + img.dim * img.dim, img.dim));
            pos += img.dim * img.dim;
        }
        let ineq = pos..pos + q;
        pos += q;
        let seg = Segments { data, vars, images: img_seg, ineq, len: pos };

        let mut k = a.tr_mul(&a) + DMatrix::identity(n, n) + g.tr_mul(&g);
        for l in &images {
            k += l.tr_mul(l);
        }
        let kkt = Cholesky::new(k).expect("MᵀM contains the identity and is positive definite");

        Self { n, c, a, b, w, images, g, h, seg, kkt }
    }

    fn offsets(&self) -> DVector<f64> {
        let mut o = DVector::zeros(self.seg.len);
        o.rows_mut(self.seg.data.start, self.seg.data.len()).copy_from(&self.b);
        o.rows_mut(self.seg.ineq.start, self.seg.ineq.len()).copy_from(&self.h);
        o
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.seg.len);
        out.rows_mut(self.seg.data.start, self.seg.data.len()).copy_from(&(&self.a * x));
        out.rows_mut(self.seg.vars.first().map(|r| r.0.start).unwrap_or(0), self.n).copy_from(x);
        for (l, (r, _)) in self.images.iter().zip(&self.seg.images) {
            out.rows_mut(r.start, r.len()).copy_from(&(l * x));
        }
        out.rows_mut(self.seg.ineq.start, self.seg.ineq.len()).copy_from(&(&self.g * x));
        out
    }

    fn apply_t(&self, y: &DVector<f64>) -> DVector<f64> {
        let start = self.seg.vars.first().map(|r| r.0.start).unwrap_or(0);
        let mut out: DVector<f64> = y.rows(start, self.n).into_owned();
        out += self.a.tr_mul(&y.rows(self.seg.data.start, self.seg.data.len()));
        for (l, (r, _)) in self.images.iter().zip(&self.seg.images) {
            out += l.tr_mul(&y.rows(r.start, r.len()));
        }
        out += self.g.tr_mul(&y.rows(self.seg.ineq.start, self.seg.ineq.len()));
        out
    }

    /// Proximal step: soft-threshold data residuals, project cone blocks.
    fn prox(&self, v: &DVector<f64>, rho: f64) -> DVector<f64> {
        let mut z = v.clone();
        for (i, k) in self.seg.data.clone().enumerate() {
            let t = self.w[i] / rho;
            let x = v[k];
            z[k] = x.signum() * (x.abs() - t).max(0.0);
        }
        for (r, d) in self.seg.vars.iter().chain(&self.seg.images) {
            let h = HermitianMatrix::from_coords(*d, &v.as_slice()[r.clone()]);
            let p = project_psd(&h).coords();
            z.rows_mut(r.start, r.len()).copy_from_slice(&p);
        }
        for k in self.seg.ineq.clone() {
            z[k] = v[k].max(0.0);
        }
        z
    }

    /// cᵀx + Σ w|r| evaluated on the cone iterate.
    fn primal_objective(&self, z: &DVector<f64>) -> f64 {
        let start = self.seg.vars.first().map(|r| r.0.start).unwrap_or(0);
        let x = z.rows(start, self.n);
        let r = &self.a * x - &self.b;
        self.c.dot(&x) + r.iter().zip(self.w.iter()).map(|(r, w)| w * r.abs()).sum::<f64>()
    }

    fn max_eigenvalue_of_block(&self, y: &DVector<f64>, r: &std::ops::Range<usize>, d: usize) -> f64 {
        let h = HermitianMatrix::from_coords(d, &y.as_slice()[r.clone()]);
        let ev = h.eigenvalues();
        ev[ev.len() - 1]
    }

    fn certifies_infeasibility(&self, dy: &DVector<f64>, o: &DVector<f64>) -> bool {
        let norm = dy.amax();
        if norm < 1e-10 {
            return false;
        }
        let eps = INFEASIBILITY_EPS * norm;
        if self.seg.data.clone().any(|k| dy[k].abs() > eps) {
            return false;
        }
        if self.apply_t(dy).amax() > eps {
            return false;
        }
        if self.seg.ineq.clone().any(|k| dy[k] > eps) {
            return false;
        }
        for (r, d) in self.seg.vars.iter().chain(&self.seg.images) {
            if self.max_eigenvalue_of_block(dy, r, *d) > eps {
                return false;
            }
        }
        o.dot(dy) < -eps
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

fn unstack(w: &DVector<f64>, len: usize) -> (DVector<f64>, DVector<f64>) {
    (w.rows(0, len).into_owned(), w.rows(len, len).into_owned())
}

fn variable_values(compiled: &Compiled, z: &DVector<f64>) -> Vec<HermitianMatrix> {
    compiled
        .seg
        .vars
        .iter()
        .map(|(r, d)| HermitianMatrix::from_coords(*d, &z.as_slice()[r.clone()]))
        .collect()
}

/// Largest violation of PSD images and linear inequalities at the given values.
pub(super) fn feasibility_violation(p: &ConicProblem, values: &[HermitianMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for img in &p.psd_images {
        worst = worst.max(-img.evaluate(values).min_eigenvalue());
    }
    for li in &p.linear_inequalities {
        worst = worst.max(li.lower - li.functional.evaluate(values));
    }
    worst.max(0.0)
}

/// Solves a `ConicProblem` with the configured method. The interior-point
/// path needs a strictly feasible start; problems without one go through
/// the splitting iteration, which can certify infeasibility.
pub fn solve(problem: &ConicProblem, config: &SolverConfig) -> Result<Solution, SolverError> {
    validate(problem)?;
    let cp = Compiled::new(problem);
    if config.method == SolverMethod::InteriorPoint {
        if let Some(sol) = super::interior::solve(problem, &cp, config) {
            return Ok(sol);
        }
    }
    Ok(splitting(problem, &cp, config))
}

pub(super) fn finish(
    problem: &ConicProblem,
    values: Vec<HermitianMatrix>,
    status: SolveStatus,
    primal_residual: f64,
    dual_residual: f64,
    iterations: usize,
    history: Vec<f64>,
) -> Solution {
    let mut slacks = vec![0.0; problem.slack_weights.len()];
    for rc in &problem.residual_constraints {
        slacks[rc.slack] = (rc.functional.evaluate(&values) - rc.observed).abs();
    }
    let objective_value = problem.objective(&values, &slacks);
    let primal_residual = primal_residual.max(feasibility_violation(problem, &values));
    Solution {
        variable_values: values,
        slack_values: slacks,
        objective_value,
        status,
        primal_residual,
        dual_residual,
        iterations,
        history,
    }
}

/// Operator-splitting (ADMM) iteration with Anderson extrapolation.
fn splitting(problem: &ConicProblem, cp: &Compiled, config: &SolverConfig) -> Solution {
    let o = cp.offsets();
    let tol = config.tolerance;
    let alpha = config.relaxation;
    let mut rho = config.penalty;

    let len = cp.seg.len;
    let mut z = cp.prox(&(-&o), rho);
    let mut u = DVector::zeros(len);
    let mut y_check = DVector::zeros(len);
    let mut r_p = f64::INFINITY;
    let mut r_d = f64::INFINITY;
    let mut status = SolveStatus::MaxIterations;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut aa = Anderson::new(config.anderson_memory);
    let mut pending: Option<(DVector<f64>, f64)> = None;

    for it in 1..=config.max_iterations {
        iterations = it;
        let rhs = cp.apply_t(&(&z + &o - &u)) - &cp.c / rho;
        let x = cp.kkt.solve(&rhs);
        let s = cp.apply(&x) - &o;
        let s_hat = &s * alpha + &z * (1.0 - alpha);
        let z_new = cp.prox(&(&s_hat + &u), rho);
        let u_new = &u + &s_hat - &z_new;

        let w = stack(&z, &u);
        let f = stack(&z_new, &u_new);
        let g = &w - &f;
        let g_norm = g.norm();
        if let Some((fallback, previous)) = pending.take() {
            if g_norm > previous {
                aa.reset();
                (z, u) = unstack(&fallback, len);
                continue;
            }
        }

        let check = config.record_history || it % 10 == 0 || it == config.max_iterations;
        if check {
            r_p = (&s - &z_new).amax();
            r_d = rho * cp.apply_t(&(&z_new - &z)).amax();
            if config.record_history {
                history.push(r_p + r_d);
            }
            if r_p < tol && r_d < tol {
                let values = variable_values(&cp, &z_new);
                let primal = cp.primal_objective(&z_new);
                let dual = -o.dot(&u_new) * rho;
                let gap_ok = (primal - dual).abs() <= tol * (1.0 + primal.abs());
                if gap_ok && feasibility_violation(problem, &values) < tol {
                    z = z_new;
                    status = SolveStatus::Optimal;
                    break;
                }
            }
        }

        if it % config.adapt_interval == 0 {
            let y = &u_new * rho;
            if r_p > tol && cp.certifies_infeasibility(&(&y - &y_check), &o) {
                z = z_new;
                status = SolveStatus::Infeasible;
                break;
            }
            y_check = y;
            z = z_new;
            u = u_new;
            if r_p > BALANCE_RATIO * r_d {
                rho *= 2.0;
                u /= 2.0;
                aa.reset();
            } else if r_d > BALANCE_RATIO * r_p {
                rho /= 2.0;
                u *= 2.0;
                aa.reset();
            }
            continue;
        }

        match aa.push(&g, &f) {
            Some(next) => {
                pending = Some((f, g_norm));
                (z, u) = unstack(&next, len);
            }
            None => {
                z = z_new;
                u = u_new;
            }
        }
    }
    finish(problem, variable_values(cp, &z), status, r_p, r_d, iterations, history)
}
