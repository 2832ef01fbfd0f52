use super::dataset::{channel_observables, SignalRecord, PREPARATION_COUNT};
use super::state::{slack_rows, StateTomographyResult};
use super::TomographyError;
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::qmap::{
    chi_to_superoperator, reshuffle, ChiMatrix, ChoiMatrix, OperatorBasis, SuperoperatorMatrix,
};
use crate::solver::{solve, AffineFunctional, ConicProblem, SolveStatus, SolverConfig};

#[derive(Debug, Clone)]
pub struct ProcessEstimate {
    pub chi: ChiMatrix,
    pub superop: SuperoperatorMatrix,
    pub choi: ChoiMatrix,
    /// Solver slacks per preparation and channel.
    pub residuals: Vec<[f64; 15]>,
    pub time_index: usize,
    pub iterations: usize,
}

/// Weight W with ⟨W, D⟩ = tr(Φ(ρ) O) for the dynamical matrix D of Φ.
fn response_weight(rho: &CMatrix, o: &CMatrix) -> HermitianMatrix {
    HermitianMatrix::symmetrized(o.kronecker(&rho.transpose()))
}

/// Minimum-trace dynamical matrix consistent with the signals at one time step.
pub fn process_tomography(
    initial: &StateTomographyResult,
    data_at_tk: &[SignalRecord],
    basis: &OperatorBasis,
    time_index: usize,
    config: &SolverConfig,
) -> Result<ProcessEstimate, TomographyError> {
    if data_at_tk.len() != PREPARATION_COUNT || initial.states.len() != PREPARATION_COUNT {
        return Err(TomographyError::Shape(format!(
            "expected {PREPARATION_COUNT} states and records, got {} and {}",
            initial.states.len(),
            data_at_tk.len()
        )));
    }
    let d = initial.states[0].dim();
    if basis.len() != d * d {
        return Err(TomographyError::Shape(format!("operator basis has {} elements for dimension {d}", basis.len())));
    }
    let observables = channel_observables();
    let n = basis.len();

    let mut p = ConicProblem::default();
    let dyn_var = p.add_variable(HermitianMatrix::identity(n));
    for (state, record) in initial.states.iter().zip(data_at_tk) {
        for (o, v) in observables.iter().zip(record.values()) {
            let w = response_weight(state.matrix().matrix(), o.matrix());
            p.add_residual(AffineFunctional::single(dyn_var, w), v, 1.0);
        }
    }

    let sol = solve(&p, config)?;
    if sol.status != SolveStatus::Optimal {
        return Err(TomographyError::Solver { stage: "process", index: time_index, status: sol.status });
    }
    // χ = V⁻¹ D V⁻†
    let d = sol.variable_values[0].matrix();
    let chi = HermitianMatrix::symmetrized(&basis.v_inv * d * basis.v_inv.adjoint());
    let chi = ChiMatrix::new(chi, &basis.id)?;
    let superop = chi_to_superoperator(&chi, basis)?;
    let choi = reshuffle(&superop);
    let residuals = slack_rows(&sol.slack_values);
    Ok(ProcessEstimate { chi, superop, choi, residuals, time_index, iterations: sol.iterations })
}
