use super::series::DecaySeries;
use super::AnalysisError;
use nalgebra::{Matrix3, Vector3};

pub const MAX_FIT_ITERATIONS: usize = 1000;
pub const PARAMETER_TOLERANCE: f64 = 1e-8;
const SINGULAR_RCOND: f64 = 1e-14;

/// M(t) = m0·e^{−t/t_star} + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub m0: f64,
    pub t_star: f64,
    pub c: f64,
    /// (σ_M0, σ_T, σ_c); NaN when the normal matrix is singular.
    pub std_errors: (f64, f64, f64),
    /// sqrt(SSR / (n − 3)).
    pub rmse: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn evaluate(&self, t: f64) -> f64 {
        model(&Vector3::new(self.m0, self.t_star, self.c), t)
    }
}

fn model(p: &Vector3<f64>, t: f64) -> f64 {
    p[0] * (-t / p[1]).exp() + p[2]
}

fn ssr(p: &Vector3<f64>, s: &DecaySeries) -> f64 {
    s.times.iter().zip(&s.values).map(|(&t, &v)| (model(p, t) - v).powi(2)).sum()
}

/// JᵀJ and Jᵀr at p, with r = model − data.
fn normal_equations(p: &Vector3<f64>, s: &DecaySeries) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (&t, &v) in s.times.iter().zip(&s.values) {
        let e = (-t / p[1]).exp();
        let row = Vector3::new(e, p[0] * e * t / (p[1] * p[1]), 1.0);
        jtj += row * row.transpose();
        jtr += row * (model(p, t) - v);
    }
    (jtj, jtr)
}

/// Inverse of JᵀJ after diagonal equilibration, or None if it is numerically singular.
fn covariance(jtj: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let d = jtj.diagonal();
    if d.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return None;
    }
    let scale = Matrix3::from_diagonal(&d.map(|x| 1.0 / x.sqrt()));
    let scaled = scale * jtj * scale;
    let eig = scaled.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > SINGULAR_RCOND * hi) {
        return None;
    }
    scaled.try_inverse().map(|inv| scale * inv * scale)
}

/// Starting point: c₀ = last value, M₀ = first − last, T₀ where the series first
/// crosses c₀ + M₀/e (half the time span if it never does).
pub fn default_initialization(series: &DecaySeries) -> (f64, f64, f64) {
    let n = series.len();
    let c0 = series.values[n - 1];
    let m0 = series.values[0] - c0;
    let span = series.times[n - 1] - series.times[0];
    let target = c0 + m0 / std::f64::consts::E;
    let below = |v: f64| if m0 >= 0.0 { v <= target } else { v >= target };
    let mut t0 = 0.5 * span;
    let crossing = if m0 != 0.0 { (1..n).find(|&k| below(series.values[k])) } else { None };
    if let Some(k) = crossing {
        let (ta, tb) = (series.times[k - 1], series.times[k]);
        let (va, vb) = (series.values[k - 1], series.values[k]);
        let frac = if vb != va { ((target - va) / (vb - va)).clamp(0.0, 1.0) } else { 1.0 };
        let t = ta + frac * (tb - ta) - series.times[0];
        if t > 0.0 {
            t0 = t;
        }
    }
    if !(t0 > 0.0) {
        t0 = 1.0;
    }
    (m0, t0, c0)
}

/// Levenberg–Marquardt least-squares fit of a single exponential with offset.
pub fn fit_exponential(series: &DecaySeries, init: Option<(f64, f64, f64)>) -> Result<FitResult, AnalysisError> {
    let n = series.len();
    if n < 4 {
        return Err(AnalysisError::Fit(format!("need at least 4 points, got {n}")));
    }
    if series.values.iter().chain(&series.times).any(|v| !v.is_finite()) {
        return Err(AnalysisError::Fit("series contains non-finite values".into()));
    }
    let (m0, t0, c0) = init.unwrap_or_else(|| default_initialization(series));
    if !(t0 > 0.0) {
        return Err(AnalysisError::Fit(format!("initial time constant must be positive, got {t0}")));
    }
    let mut p = Vector3::new(m0, t0, c0);
    let mut cost = ssr(&p, series);
    let (mut jtj, mut jtr) = normal_equations(&p, series);
    let mut lambda = 1e-3 * jtj.diagonal().max().max(f64::MIN_POSITIVE);
    let mut converged = false;

    for _ in 0..MAX_FIT_ITERATIONS {
        if cost == 0.0 || jtr.amax() == 0.0 {
            converged = true;
            break;
        }
        let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal().map(|x| lambda * x.max(1e-300)));
        let Some(step) = damped.cholesky().map(|ch| -ch.solve(&jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let trial = p + step;
        let trial_cost = if trial[1] > 0.0 { ssr(&trial, series) } else { f64::INFINITY };
        if trial_cost.is_finite() && trial_cost <= cost {
            let rel = (step.component_div(&p.map(|x| x.abs().max(1e-12)))).amax();
            p = trial;
            cost = trial_cost;
            (jtj, jtr) = normal_equations(&p, series);
            lambda = (lambda / 3.0).max(1e-15);
            if rel <= PARAMETER_TOLERANCE {
                converged = true;
                break;
            }
        } else {
            lambda *= 2.0;
            if lambda > 1e20 {
                converged = true;
                break;
            }
        }
    }

    let rmse = (cost / (n - 3) as f64).sqrt();
    let cov = covariance(&jtj);
    let std_errors = match cov {
        Some(cov) => ((rmse * rmse * cov[(0, 0)]).sqrt(), (rmse * rmse * cov[(1, 1)]).sqrt(), (rmse * rmse * cov[(2, 2)]).sqrt()),
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    let converged = converged && cov.is_some() && p[1] > 0.0;
    Ok(FitResult { m0: p[0], t_star: p[1], c: p[2], std_errors, rmse, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Vec<f64> {
        (0..51).map(|k| 60.0 * k as f64 / 50.0).collect()
    }

    fn exact(m0: f64, t: f64, c: f64, times: Vec<f64>) -> DecaySeries {
        let v = times.iter().map(|&x| m0 * (-x / t).exp() + c).collect();
        DecaySeries::new(times, v, "exact").unwrap()
    }

    #[test]
    fn recovers_exact_decay() {
        let s = exact(1.0, 2.0, 0.1, grid());
        let f = fit_exponential(&s, None).unwrap();
        assert!(f.converged);
        assert!((f.m0 - 1.0).abs() < 1e-6);
        assert!((f.t_star - 2.0).abs() < 2e-6);
        assert!((f.c - 0.1).abs() < 1e-7);
        assert!(f.rmse < 1e-10, "rmse {}", f.rmse);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = DecaySeries::new(grid(), vec![0.5; 51], "flat").unwrap();
        let f = fit_exponential(&s, None).unwrap();
        assert!((f.c - 0.5).abs() < 1e-9);
        assert!(f.m0.abs() < 1e-9);
        assert!(!f.converged);
    }

    #[test]
    fn too_few_points() {
        let s = exact(1.0, 1.0, 0.0, vec![0.0, 1.0, 2.0]);
        assert!(fit_exponential(&s, None).is_err());
    }

    #[test]
    fn initialization_follows_the_crossing_rule() {
        let s = exact(2.0, 5.0, 0.0, (0..601).map(|k| k as f64 * 0.1).collect());
        let (m0, t0, c0) = default_initialization(&s);
        assert!((c0 - 2.0 * (-12.0f64).exp()).abs() < 1e-12);
        assert!((m0 - (2.0 - c0)).abs() < 1e-12);
        assert!((t0 - 5.0).abs() < 0.01, "t0 {t0}");
        let flat = DecaySeries::new(vec![0.0, 1.0, 2.0, 4.0], vec![1.0; 4], "flat").unwrap();
        assert_eq!(default_initialization(&flat).1, 2.0);
    }

    #[test]
    fn noisy_fit_reports_errors() {
        let times = grid();
        let v: Vec<f64> = times.iter().enumerate().map(|(k, &x)| (-x / 4.0).exp() + 1e-3 * ((k * 7919) % 13) as f64 / 13.0).collect();
        let f = fit_exponential(&DecaySeries::new(times, v, "noisy").unwrap(), None).unwrap();
        assert!(f.converged);
        assert!(f.rmse > 1e-5 && f.rmse < 1e-3);
        assert!(f.std_errors.1 > 0.0 && f.std_errors.1 < 0.1);
        assert!((f.t_star - 4.0).abs() < 5.0 * f.std_errors.1 + 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fit_never_worsens_initial_residual(m0 in 0.1f64..3.0, t in 0.2f64..20.0, c in -0.5f64..0.5, w in -0.3f64..0.3) {
            let times = grid();
            let v: Vec<f64> = times.iter().enumerate().map(|(k, &x)| m0 * (-x / t).exp() + c + w * ((k % 5) as f64 - 2.0) * 0.01).collect();
            let s = DecaySeries::new(times, v, "p").unwrap();
            let init = default_initialization(&s);
            let f = fit_exponential(&s, Some(init)).unwrap();
            let at_init = ssr(&Vector3::new(init.0, init.1, init.2), &s);
            let at_fit = ssr(&Vector3::new(f.m0, f.t_star, f.c), &s);
            prop_assert!(at_fit <= at_init);
        }

        #[test]
        fn recovery_is_insensitive_to_initialization(t in 0.5f64..10.0, f1 in 0.1f64..10.0, f2 in 0.1f64..10.0) {
            let times: Vec<f64> = (0..51).map(|k| 0.4 * t * k as f64).collect();
            let s = exact(1.0, t, 0.1, times);
            let fit = fit_exponential(&s, Some((f1, t * f2, 0.0))).unwrap();
            prop_assert!(((fit.t_star - t) / t).abs() < 1e-6, "t {} got {}", t, fit.t_star);
            prop_assert!((fit.m0 - 1.0).abs() < 1e-6);
        }
    }
}
