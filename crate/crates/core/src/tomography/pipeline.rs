use super::dataset::Dataset;
use super::process::{process_tomography, ProcessEstimate};
use super::state::{state_tomography_pass1, state_tomography_pass2, StateTomographyResult};
use super::TomographyError;
use crate::qmap::OperatorBasis;
use crate::solver::SolverConfig;
use rayon::prelude::*;

#[derive(Debug, Clone, Default)]
pub struct ReconstructionConfig {
    pub solver: SolverConfig,
    /// Worker threads for the per-time-step solves; 0 lets rayon decide.
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub pass1: StateTomographyResult,
    pub initial: StateTomographyResult,
    pub times: Vec<f64>,
    /// One entry per time index, in time order.
    pub estimates: Vec<Result<ProcessEstimate, TomographyError>>,
}

impl Reconstruction {
    pub fn failures(&self) -> Vec<(usize, &TomographyError)> {
        self.estimates.iter().enumerate().filter_map(|(k, r)| r.as_ref().err().map(|e| (k, e))).collect()
    }

    /// All estimates, or the first per-k failure.
    pub fn successful(&self) -> Result<Vec<&ProcessEstimate>, &TomographyError> {
        self.estimates.iter().map(|r| r.as_ref()).collect()
    }
}

/// Two-pass state tomography at t₀, then independent process tomography at
/// every time index. Per-k failures are collected rather than aborting.
pub fn run_full_reconstruction(
    dataset: &Dataset,
    basis: &OperatorBasis,
    config: &ReconstructionConfig,
) -> Result<Reconstruction, TomographyError> {
    let at0 = dataset.at_time(0);
    let pass1 = state_tomography_pass1(&at0, &config.solver)?;
    let initial = state_tomography_pass2(&at0, pass1.n0, &config.solver)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| TomographyError::Threads(e.to_string()))?;
    let estimates = pool.install(|| {
        (0..dataset.times().len())
            .into_par_iter()
            .map(|k| process_tomography(&initial, &dataset.at_time(k), basis, k, &config.solver))
            .collect()
    });
    Ok(Reconstruction { pass1, initial, times: dataset.times().to_vec(), estimates })
}
