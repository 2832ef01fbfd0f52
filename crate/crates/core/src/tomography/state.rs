use super::dataset::{channel_observables, SignalRecord, PREPARATION_COUNT};
use super::TomographyError;
use crate::linalg::HermitianMatrix;
use crate::qmap::DensityEstimate;
use crate::solver::{solve, AffineFunctional, ConicProblem, LinearInequality, SolveStatus, SolverConfig};

#[derive(Debug, Clone)]
pub struct StateTomographyResult {
    pub states: Vec<DensityEstimate>,
    /// Solver slacks Δ per preparation and channel.
    pub residuals: Vec<[f64; 15]>,
    pub n0: f64,
}

fn state_program(record: &SignalRecord, n0: Option<f64>, observables: &[HermitianMatrix]) -> ConicProblem {
    let mut p = ConicProblem::default();
    let rho = p.add_variable(HermitianMatrix::identity(4));
    for (o, v) in observables.iter().zip(record.values()) {
        p.add_residual(AffineFunctional::single(rho, o.clone()), v, 1.0);
    }
    if let Some(n0) = n0 {
        p.linear_inequalities.push(LinearInequality { functional: AffineFunctional::trace(rho, 4), lower: n0 });
    }
    p
}

pub(crate) fn slack_rows(slacks: &[f64]) -> Vec<[f64; 15]> {
    slacks.chunks_exact(15).map(|c| c.try_into().expect("chunk of 15")).collect()
}

fn run(data: &[SignalRecord], n0: Option<f64>, config: &SolverConfig) -> Result<StateTomographyResult, TomographyError> {
    if data.len() != PREPARATION_COUNT {
        return Err(TomographyError::Shape(format!("expected {PREPARATION_COUNT} records, got {}", data.len())));
    }
    let stage = if n0.is_some() { "state pass 2" } else { "state pass 1" };
    let observables = channel_observables();
    let mut states = Vec::with_capacity(data.len());
    let mut residuals = Vec::with_capacity(data.len());
    for (idx, record) in data.iter().enumerate() {
        let prep = idx + 1;
        let sol = solve(&state_program(record, n0, &observables), config)?;
        if sol.status != SolveStatus::Optimal {
            return Err(TomographyError::Solver { stage, index: prep, status: sol.status });
        }
        let mut rho = sol.variable_values[0].clone();
        if let Some(n0) = n0 {
            let short = n0 - rho.trace();
            if short > 0.0 {
                rho = rho.add(&HermitianMatrix::identity(4).scale(short / 4.0));
            }
        }
        residuals.extend(slack_rows(&sol.slack_values));
        states.push(DensityEstimate::new(rho).map_err(|source| TomographyError::InvalidState { prep, source })?);
    }
    let n0 = match n0 {
        Some(v) => v,
        None => states.iter().map(|s| s.trace()).fold(0.0, f64::max),
    };
    Ok(StateTomographyResult { states, residuals, n0 })
}

/// Minimum-trace PSD fit of each preparation to its 15 signals at t₀;
/// `n0` is the largest recovered trace.
pub fn state_tomography_pass1(data_at_t0: &[SignalRecord], config: &SolverConfig) -> Result<StateTomographyResult, TomographyError> {
    run(data_at_t0, None, config)
}

/// Same fit with the extra bound tr ρ ≥ n0.
pub fn state_tomography_pass2(
    data_at_t0: &[SignalRecord],
    n0: f64,
    config: &SolverConfig,
) -> Result<StateTomographyResult, TomographyError> {
    if !n0.is_finite() {
        return Err(TomographyError::Shape(format!("trace bound must be finite, got {n0}")));
    }
    run(data_at_t0, Some(n0), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmr::{generate_dataset, rescaled_equilibrium, NoiseSpec, RelaxationParams, SpinSystemParams};
    use crate::qmap::build_mub_preparations;

    fn unit_trace_records() -> Vec<SignalRecord> {
        build_mub_preparations().states.iter().map(|s| SignalRecord::of_state(s.matrix())).collect()
    }

    fn simulated_t0() -> Vec<SignalRecord> {
        let p = SpinSystemParams::default();
        generate_dataset(&p, &RelaxationParams::default(), &NoiseSpec::none(), &[0.0]).unwrap().at_time(0)
    }

    fn assert_consistent(result: &StateTomographyResult, data: &[SignalRecord]) {
        let observables = channel_observables();
        for ((state, record), slacks) in result.states.iter().zip(data).zip(&result.residuals) {
            for ((o, v), s) in observables.iter().zip(record.values()).zip(slacks) {
                assert!(*s >= -1e-10);
                assert!((o.inner(state.matrix()) - v).abs() <= s + 1e-7);
            }
        }
    }

    #[test]
    fn zero_signals_give_zero_states() {
        let data = vec![SignalRecord::from_values(&[0.0; 15]); 20];
        let r = state_tomography_pass1(&data, &SolverConfig::default()).unwrap();
        assert!(r.n0.abs() < 1e-8);
        for (s, slacks) in r.states.iter().zip(&r.residuals) {
            assert!(s.matrix().frobenius_norm() < 1e-8);
            assert!(slacks.iter().all(|d| d.abs() < 1e-8));
        }
    }

    #[test]
    fn pure_preparations_recovered_after_second_pass() {
        let data = unit_trace_records();
        let cfg = SolverConfig::default();
        let p1 = state_tomography_pass1(&data, &cfg).unwrap();
        let p2 = state_tomography_pass2(&data, p1.n0, &cfg).unwrap();
        for s in &p2.states {
            assert!((s.trace() - 1.0).abs() < 1e-6, "trace {}", s.trace());
        }
        let up_up = HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]);
        assert!(p2.states[0].matrix().sub(&up_up).frobenius_norm() < 1e-6);
        assert_consistent(&p2, &data);
    }

    #[test]
    fn rescaled_equilibrium_signals_fit_within_slack() {
        let eq = rescaled_equilibrium(&SpinSystemParams::default());
        let data = vec![SignalRecord::of_state(eq.matrix()); 20];
        let r = state_tomography_pass1(&data, &SolverConfig::default()).unwrap();
        assert_consistent(&r, &data);
        for (s, slacks) in r.states.iter().zip(&r.residuals) {
            let cost = s.trace() + slacks.iter().sum::<f64>();
            assert!((cost - eq.trace()).abs() < 1e-6, "cost {cost}");
        }
    }

    #[test]
    fn refeeding_own_bound_keeps_the_largest_state() {
        let data = simulated_t0();
        let cfg = SolverConfig::default();
        let p1 = state_tomography_pass1(&data, &cfg).unwrap();
        let top = (0..20).max_by(|&a, &b| p1.states[a].trace().total_cmp(&p1.states[b].trace())).unwrap();
        let p2 = state_tomography_pass2(&data, p1.n0, &cfg).unwrap();
        assert!(p2.states[top].matrix().sub(p1.states[top].matrix()).frobenius_norm() < 1e-7);
        for s in &p2.states {
            assert!(s.trace() >= p1.n0 - 1e-8);
        }
        assert_consistent(&p1, &data);
        assert_consistent(&p2, &data);
    }

    #[test]
    fn oversized_trace_bound_fails() {
        let data = simulated_t0();
        let err = state_tomography_pass2(&data, 2.0, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, TomographyError::InvalidState { .. } | TomographyError::Solver { .. }), "{err}");
    }

    #[test]
    fn wrong_record_count_is_rejected() {
        let data = vec![SignalRecord::from_values(&[0.0; 15]); 19];
        assert!(matches!(state_tomography_pass1(&data, &SolverConfig::default()), Err(TomographyError::Shape(_))));
        assert!(state_tomography_pass2(&unit_trace_records(), f64::NAN, &SolverConfig::default()).is_err());
    }
}
