use super::admm::{finish, Compiled, SolveStatus, Solution, SolverConfig};
use super::problem::ConicProblem;
use crate::linalg::{c, CMatrix, HermitianMatrix, C64};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

const STEP_FRACTION: f64 = 0.98;
const MIN_STEP: f64 = 1e-10;
const STALL_WINDOW: usize = 25;

/// Primal-dual point. With r = Ax − b the residual slacks are p = t − r and
/// q = t + r, σ = Gx − h; the links q − p = 2r and σ = Gx − h are equality
/// constraints with multipliers ν1, ν2. Duals: y_p, y_q, y_σ ≥ 0, Z ⪰ 0 per
/// variable block, W ⪰ 0 per PSD image.
#[derive(Clone)]
struct Point {
    x: DVector<f64>,
    p: DVector<f64>,
    q: DVector<f64>,
    sigma: DVector<f64>,
    yp: DVector<f64>,
    yq: DVector<f64>,
    ys: DVector<f64>,
    nu1: DVector<f64>,
    nu2: DVector<f64>,
    z: Vec<CMatrix>,
    w: Vec<CMatrix>,
}

impl Point {
    fn axpy(&self, s: f64, d: &Point) -> Point {
        let v = |a: &DVector<f64>, b: &DVector<f64>| a + b * s;
        let m = |a: &[CMatrix], b: &[CMatrix]| a.iter().zip(b).map(|(a, b)| a + b * c(s, 0.0)).collect();
        Point {
            x: v(&self.x, &d.x),
            p: v(&self.p, &d.p),
            q: v(&self.q, &d.q),
            sigma: v(&self.sigma, &d.sigma),
            yp: v(&self.yp, &d.yp),
            yq: v(&self.yq, &d.yq),
            ys: v(&self.ys, &d.ys),
            nu1: v(&self.nu1, &d.nu1),
            nu2: v(&self.nu2, &d.nu2),
            z: m(&self.z, &d.z),
            w: m(&self.w, &d.w),
        }
    }
}

struct Residuals {
    e1: DVector<f64>,
    e2: DVector<f64>,
    rx: DVector<f64>,
    rp: DVector<f64>,
    rq: DVector<f64>,
    rs: DVector<f64>,
    primal: f64,
    dual: f64,
    gap: f64,
}

struct Model<'a> {
    cp: &'a Compiled,
    vars: Vec<(usize, usize)>,
    images: Vec<(&'a DMatrix<f64>, usize)>,
    entries: Vec<Vec<Vec<(usize, usize, C64)>>>,
}

/// Factorized Newton system at one point; directions are affine in μ.
struct Newton<'a> {
    at: &'a Point,
    res: &'a Residuals,
    chol: Cholesky<f64, Dyn>,
    x_inv: Vec<CMatrix>,
    y_inv: Vec<CMatrix>,
    s1: DVector<f64>,
}

/// Nonzero entries of each orthonormal coordinate basis matrix.
fn coordinate_entries(d: usize) -> Vec<Vec<(usize, usize, C64)>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<Vec<(usize, usize, C64)>> = (0..d).map(|i| vec![(i, i, c(1.0, 0.0))]).collect();
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(vec![(i, j, c(h, 0.0)), (j, i, c(h, 0.0))]);
            out.push(vec![(i, j, c(0.0, h)), (j, i, c(0.0, -h))]);
        }
    }
    out
}

/// H_kl = Re tr(E_k A E_l B): the coordinate matrix of ΔX ↦ sym(A ΔX B)
/// for Hermitian A, B.
fn pair_form(a: &CMatrix, b: &CMatrix, entries: &[Vec<(usize, usize, C64)>]) -> DMatrix<f64> {
    let n = entries.len();
    let mut h = DMatrix::zeros(n, n);
    for (k, ek) in entries.iter().enumerate() {
        for (l, el) in entries.iter().enumerate().skip(k) {
            let mut acc = c(0.0, 0.0);
            for &(i, j, u) in ek {
                for &(r, s, v) in el {
                    acc += u * v * a[(j, r)] * b[(s, i)];
                }
            }
            h[(k, l)] = acc.re;
            h[(l, k)] = acc.re;
        }
    }
    h
}

fn block(x: &DVector<f64>, offset: usize, d: usize) -> CMatrix {
    HermitianMatrix::from_coords(d, &x.as_slice()[offset..offset + d * d]).into_matrix()
}

fn coords(m: CMatrix) -> DVector<f64> {
    DVector::from_vec(HermitianMatrix::symmetrized(m).coords())
}

fn hermitian_inverse(m: &CMatrix) -> Option<CMatrix> {
    Cholesky::new(m.clone()).map(|ch| ch.inverse())
}

fn real_trace(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// Largest α ≤ 1 with v + α·dv > 0 componentwise.
fn vector_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter().zip(dv.iter()).filter(|(_, d)| **d < 0.0).map(|(v, d)| -v / d).fold(1.0, f64::min)
}

/// Largest α ≤ 1 with M + α·dM ⪰ 0, for M ≻ 0.
fn matrix_step(m: &CMatrix, dm: &CMatrix) -> f64 {
    let Some(ch) = Cholesky::new(m.clone()) else { return 0.0 };
    let l = ch.l();
    let Some(l_inv) = l.clone().try_inverse() else { return 0.0 };
    let scaled = HermitianMatrix::symmetrized(&l_inv * dm * l_inv.adjoint());
    let low = scaled.min_eigenvalue();
    if low < 0.0 {
        (-1.0 / low).min(1.0)
    } else {
        1.0
    }
}

fn regularized_cholesky(h: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = h.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut eps = 0.0;
    for _ in 0..8 {
        let m = &h + DMatrix::identity(h.nrows(), h.ncols()) * (eps * scale);
        if let Some(chol) = Cholesky::new(m) {
            return Some(chol);
        }
        eps = if eps == 0.0 { 1e-14 } else { eps * 100.0 };
    }
    None
}

impl<'a> Model<'a> {
    fn new(cp: &'a Compiled) -> Self {
        let base = cp.seg.vars.first().map(|r| r.0.start).unwrap_or(0);
        let vars: Vec<(usize, usize)> = cp.seg.vars.iter().map(|(r, d)| (r.start - base, *d)).collect();
        let images: Vec<(&DMatrix<f64>, usize)> = cp.images.iter().zip(&cp.seg.images).map(|(l, (_, d))| (l, *d)).collect();
        let mut dims: Vec<usize> = vars.iter().map(|v| v.1).chain(images.iter().map(|i| i.1)).collect();
        dims.sort_unstable();
        dims.dedup();
        let mut entries = vec![Vec::new(); dims.last().copied().unwrap_or(0) + 1];
        for d in dims {
            entries[d] = coordinate_entries(d);
        }
        Self { cp, vars, images, entries }
    }

    fn degree(&self) -> f64 {
        let cones: usize = self.vars.iter().map(|v| v.1).chain(self.images.iter().map(|i| i.1)).sum();
        (2 * self.cp.a.nrows() + self.cp.g.nrows() + cones) as f64
    }

    fn var_blocks(&self, x: &DVector<f64>) -> Vec<CMatrix> {
        self.vars.iter().map(|&(o, d)| block(x, o, d)).collect()
    }

    fn image_blocks(&self, x: &DVector<f64>) -> Vec<CMatrix> {
        self.images.iter().map(|(l, d)| block(&(*l * x), 0, *d)).collect()
    }

    fn objective(&self, z: &Point) -> f64 {
        self.cp.c.dot(&z.x) + 0.5 * self.cp.w.dot(&(&z.p + &z.q))
    }

    /// Strictly interior cone start: a scaled identity on every block.
    fn start(&self) -> Option<Point> {
        let cp = self.cp;
        let mut unit = DVector::zeros(cp.n);
        for &(o, d) in &self.vars {
            for i in 0..d {
                unit[o + i] = 1.0;
            }
        }
        let mut alpha = 1.0;
        for _ in 0..40 {
            let x = &unit * alpha;
            let cones = self.var_blocks(&x).into_iter().chain(self.image_blocks(&x)).all(|m| Cholesky::new(m).is_some());
            let sigma = &cp.g * &x - &cp.h;
            if cones && sigma.iter().all(|&s| s > 0.0) {
                let r = &cp.a * &x - &cp.b;
                let t = r.map(|v| v.abs() + 1.0);
                let m = r.len();
                let k = sigma.len();
                return Some(Point {
                    p: &t - &r,
                    q: &t + &r,
                    sigma,
                    yp: DVector::from_element(m, 1.0),
                    yq: DVector::from_element(m, 1.0),
                    ys: DVector::from_element(k, 1.0),
                    nu1: DVector::zeros(m),
                    nu2: DVector::from_element(k, -1.0),
                    z: self.vars.iter().map(|&(_, d)| CMatrix::identity(d, d)).collect(),
                    w: self.images.iter().map(|&(_, d)| CMatrix::identity(d, d)).collect(),
                    x,
                });
            }
            alpha *= 2.0;
        }
        None
    }

    fn residuals(&self, z: &Point) -> Residuals {
        let cp = self.cp;
        let e1 = &z.q - &z.p - (&cp.a * &z.x - &cp.b) * 2.0;
        let e2 = &cp.g * &z.x - &cp.h - &z.sigma;
        let mut rx = &cp.c - cp.a.tr_mul(&z.nu1) * 2.0 + cp.g.tr_mul(&z.nu2);
        for (&(o, d), zm) in self.vars.iter().zip(&z.z) {
            let mut view = rx.rows_mut(o, d * d);
            view -= coords(zm.clone());
        }
        for ((l, _), wm) in self.images.iter().zip(&z.w) {
            rx -= l.tr_mul(&coords(wm.clone()));
        }
        let half = &cp.w * 0.5;
        let rp = &half - &z.yp - &z.nu1;
        let rq = &half - &z.yq + &z.nu1;
        let rs = -&z.ys - &z.nu2;
        let mut gap = z.p.dot(&z.yp) + z.q.dot(&z.yq) + z.sigma.dot(&z.ys);
        for (xm, zm) in self.var_blocks(&z.x).iter().zip(&z.z) {
            gap += real_trace(xm, zm);
        }
        for (ym, wm) in self.image_blocks(&z.x).iter().zip(&z.w) {
            gap += real_trace(ym, wm);
        }
        let primal = e1.amax().max(e2.amax());
        let dual = rx.amax().max(rp.amax()).max(rq.amax()).max(rs.amax());
        Residuals { e1, e2, rx, rp, rq, rs, primal, dual, gap }
    }

    fn factorize<'b>(&self, at: &'b Point, res: &'b Residuals) -> Option<Newton<'b>> {
        let cp = self.cp;
        let x_inv: Vec<CMatrix> = self.var_blocks(&at.x).iter().map(hermitian_inverse).collect::<Option<_>>()?;
        let y_inv: Vec<CMatrix> = self.image_blocks(&at.x).iter().map(hermitian_inverse).collect::<Option<_>>()?;
        let mut h = DMatrix::zeros(cp.n, cp.n);
        for ((&(o, d), zm), xi) in self.vars.iter().zip(&at.z).zip(&x_inv) {
            let len = d * d;
            let mut view = h.view_mut((o, o), (len, len));
            view += pair_form(zm, xi, &self.entries[d]);
        }
        for (((l, d), wm), yi) in self.images.iter().zip(&at.w).zip(&y_inv) {
            h += l.tr_mul(&(pair_form(wm, yi, &self.entries[*d]) * *l));
        }
        let s1 = DVector::from_fn(at.p.len(), |i, _| at.q[i] / at.yq[i] + at.p[i] / at.yp[i]);
        let mut scaled = cp.a.clone();
        for i in 0..s1.len() {
            scaled.row_mut(i).scale_mut((4.0 / s1[i]).sqrt());
        }
        h += scaled.tr_mul(&scaled);
        let mut scaled = cp.g.clone();
        for i in 0..at.sigma.len() {
            scaled.row_mut(i).scale_mut((at.ys[i] / at.sigma[i]).sqrt());
        }
        h += scaled.tr_mul(&scaled);
        let chol = regularized_cholesky(h)?;
        Some(Newton { at, res, chol, x_inv, y_inv, s1 })
    }

    /// Dual-HKM direction towards the μ-centered point.
    fn direction(&self, nt: &Newton, mu: f64) -> Point {
        let (cp, z, r) = (self.cp, nt.at, nt.res);
        let a_p = DVector::from_fn(z.p.len(), |i, _| mu / z.p[i] - z.yp[i] - r.rp[i]);
        let a_q = DVector::from_fn(z.q.len(), |i, _| mu / z.q[i] - z.yq[i] - r.rq[i]);
        let a_s = DVector::from_fn(z.sigma.len(), |i, _| mu / z.sigma[i] - z.ys[i] - r.rs[i]);
        let u1 = DVector::from_fn(z.p.len(), |i, _| r.e1[i] + z.q[i] / z.yq[i] * a_q[i] - z.p[i] / z.yp[i] * a_p[i]);

        let mut rhs = -&r.rx + cp.a.tr_mul(&u1.component_div(&nt.s1)) * 2.0;
        let ineq = DVector::from_fn(z.sigma.len(), |i, _| z.ys[i] / z.sigma[i] * r.e2[i] - a_s[i]);
        rhs -= cp.g.tr_mul(&ineq);
        let mu_c = c(mu, 0.0);
        for ((&(o, d), zm), xi) in self.vars.iter().zip(&z.z).zip(&nt.x_inv) {
            let mut view = rhs.rows_mut(o, d * d);
            view += coords(xi * mu_c - zm);
        }
        for (((l, _), wm), yi) in self.images.iter().zip(&z.w).zip(&nt.y_inv) {
            rhs += l.tr_mul(&coords(yi * mu_c - wm));
        }
        let dx = nt.chol.solve(&rhs);

        let adx = &cp.a * &dx;
        let dnu1 = DVector::from_fn(z.p.len(), |i, _| (u1[i] - 2.0 * adx[i]) / nt.s1[i]);
        let dp = DVector::from_fn(z.p.len(), |i, _| z.p[i] / z.yp[i] * (dnu1[i] + a_p[i]));
        let dq = DVector::from_fn(z.q.len(), |i, _| z.q[i] / z.yq[i] * (a_q[i] - dnu1[i]));
        let dyp = &r.rp - &dnu1;
        let dyq = &r.rq + &dnu1;
        let gdx = &cp.g * &dx;
        let dnu2 = DVector::from_fn(z.sigma.len(), |i, _| z.ys[i] / z.sigma[i] * (r.e2[i] + gdx[i]) - a_s[i]);
        let ds = DVector::from_fn(z.sigma.len(), |i, _| z.sigma[i] / z.ys[i] * (a_s[i] + dnu2[i]));
        let dys = &r.rs - &dnu2;
        let hkm = |zm: &CMatrix, xi: &CMatrix, dm: &CMatrix| {
            let sym = (zm * dm * xi + xi * dm * zm) * c(0.5, 0.0);
            xi * mu_c - zm - sym
        };
        let dw: Vec<CMatrix> = self.image_blocks(&dx).iter().zip(&z.w).zip(&nt.y_inv).map(|((dm, wm), yi)| hkm(wm, yi, dm)).collect();
        let mut dz_coords = &r.rx - cp.a.tr_mul(&dnu1) * 2.0 + cp.g.tr_mul(&dnu2);
        for ((l, _), dwm) in self.images.iter().zip(&dw) {
            dz_coords -= l.tr_mul(&coords(dwm.clone()));
        }
        let dz = self.var_blocks(&dz_coords);
        Point { x: dx, p: dp, q: dq, sigma: ds, yp: dyp, yq: dyq, ys: dys, nu1: dnu1, nu2: dnu2, z: dz, w: dw }
    }

    fn max_step(&self, z: &Point, d: &Point) -> f64 {
        let mut a = vector_step(&z.p, &d.p)
            .min(vector_step(&z.q, &d.q))
            .min(vector_step(&z.sigma, &d.sigma))
            .min(vector_step(&z.yp, &d.yp))
            .min(vector_step(&z.yq, &d.yq))
            .min(vector_step(&z.ys, &d.ys));
        let pairs = self
            .var_blocks(&z.x)
            .into_iter()
            .zip(self.var_blocks(&d.x))
            .chain(self.image_blocks(&z.x).into_iter().zip(self.image_blocks(&d.x)))
            .chain(z.z.iter().cloned().zip(d.z.iter().cloned()))
            .chain(z.w.iter().cloned().zip(d.w.iter().cloned()));
        for (m, dm) in pairs {
            a = a.min(matrix_step(&m, &dm));
        }
        a
    }
}

/// Primal-dual interior-point solve; `None` when no scaled identity is a
/// strictly feasible start.
pub(super) fn solve(problem: &ConicProblem, cp: &Compiled, config: &SolverConfig) -> Option<Solution> {
    let model = Model::new(cp);
    let mut z = model.start()?;
    let nu = model.degree();
    let tol = config.tolerance;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut res = model.residuals(&z);
    let mut best = (f64::INFINITY, 0);

    while iterations < config.max_iterations {
        let objective = model.objective(&z);
        let target = 0.1 * tol;
        if res.primal < target && res.dual < target && res.gap <= target * (1.0 + objective.abs()) {
            status = SolveStatus::Optimal;
            break;
        }
        iterations += 1;
        let Some(nt) = model.factorize(&z, &res) else { break };
        let affine = model.direction(&nt, 0.0);
        let a_aff = model.max_step(&z, &affine);
        let gap_aff = model.residuals(&z.axpy(a_aff, &affine)).gap.max(0.0);
        let centering = (gap_aff / res.gap).clamp(0.0, 1.0).powi(3);
        let d = model.direction(&nt, centering * res.gap / nu);
        let step = (STEP_FRACTION * model.max_step(&z, &d)).min(1.0);
        if step < MIN_STEP || iterations - best.1 > STALL_WINDOW {
            break;
        }
        z = z.axpy(step, &d);
        res = model.residuals(&z);
        let merit = res.primal + res.dual + res.gap.abs();
        if merit < 0.5 * best.0 {
            best = (merit, iterations);
        }
        if config.record_history {
            history.push(res.primal + res.dual);
        }
    }
    if status != SolveStatus::Optimal {
        let objective = model.objective(&z);
        if res.primal < tol && res.dual < tol && res.gap <= tol * (1.0 + objective.abs()) {
            status = SolveStatus::Optimal;
        }
    }
    let values = model.var_blocks(&z.x).into_iter().map(HermitianMatrix::symmetrized).collect();
    Some(finish(problem, values, status, res.primal, res.dual, iterations, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        &g * g.adjoint() + CMatrix::identity(d, d)
    }

    #[test]
    fn pair_form_is_the_log_det_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 3;
        let x = random_pd(&mut rng, d);
        let y = hermitian_inverse(&x).unwrap();
        let h = pair_form(&y, &y, &coordinate_entries(d));
        let xc = coords(x);
        let grad = |v: &DVector<f64>| -coords(hermitian_inverse(&block(v, 0, d)).unwrap());
        let eps = 1e-6;
        for k in 0..d * d {
            let mut e = DVector::zeros(d * d);
            e[k] = eps;
            let fd = (grad(&(&xc + &e)) - grad(&(&xc - &e))) / (2.0 * eps);
            assert!((fd - h.column(k)).amax() < 1e-6);
        }
    }

    #[test]
    fn pair_form_applies_symmetrized_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 3;
        let (a, b) = (random_pd(&mut rng, d), random_pd(&mut rng, d));
        let dx = HermitianMatrix::symmetrized(random_pd(&mut rng, d) - CMatrix::identity(d, d) * c(2.0, 0.0));
        let h = pair_form(&a, &b, &coordinate_entries(d));
        let direct = coords((&a * dx.matrix() * &b + &b * dx.matrix() * &a) * c(0.5, 0.0));
        let via = &h * DVector::from_vec(dx.coords());
        assert!((direct - via).amax() < 1e-12);
    }

    #[test]
    fn step_limits() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        assert!((vector_step(&v, &DVector::from_vec(vec![-4.0, 1.0])) - 0.25).abs() < 1e-15);
        let m = CMatrix::identity(2, 2);
        let dm = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-2.0, 0.0), c(1.0, 0.0)]));
        assert!((matrix_step(&m, &dm) - 0.5).abs() < 1e-12);
    }
}
