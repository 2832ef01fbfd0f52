use super::equilibrium::{alpha_for_polarization, equilibrium_state, pseudo_pure, signal_scale};
use super::params::{NoiseKind, NoiseSpec, RelaxationParams, SpinSystemParams};
use super::relaxation::RelaxationModel;
use super::NmrError;
use crate::qmap::{apply_map, build_mub_preparations, DensityEstimate};
use crate::tomography::{channel_observables, Dataset, SignalRecord, PREPARATION_COUNT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Physical (unit-trace) pseudo-pure preparations with polarization ε.
pub fn physical_preparations(params: &SpinSystemParams) -> Result<Vec<DensityEstimate>, NmrError> {
    let alpha = alpha_for_polarization(params.epsilon_scale);
    build_mub_preparations().vectors.iter().map(|psi| pseudo_pure(psi, alpha)).collect()
}

/// Simulates normalized signals for the 20 preparations relaxing under the
/// model channel, with optional i.i.d. Gaussian noise drawn in record order
/// (preparation, then time index, then channel).
pub fn generate_dataset(
    params: &SpinSystemParams,
    relax: &RelaxationParams,
    noise: &NoiseSpec,
    times: &[f64],
) -> Result<Dataset, NmrError> {
    params.validate()?;
    noise.validate()?;
    let scale = signal_scale(params);
    let population = params.epsilon_scale * scale;
    if population > 1.0 + 1e-8 {
        return Err(NmrError::InvalidParameter(format!(
            "epsilon_scale {:e} exceeds the equilibrium polarization scale {:e}",
            params.epsilon_scale,
            1.0 / scale
        )));
    }
    let eq = equilibrium_state(params);
    let model = RelaxationModel::new(relax, &eq)?;
    let preps = physical_preparations(params)?;
    let observables = channel_observables();

    let maps: Vec<_> = times.iter().map(|&t| model.superoperator(t.max(0.0))).collect();
    let mut records = Vec::with_capacity(PREPARATION_COUNT);
    for prep in &preps {
        let mut row = Vec::with_capacity(times.len());
        for phi in &maps {
            let rho = apply_map(phi, prep)?;
            let mut v = [0.0; 15];
            for (slot, o) in v.iter_mut().zip(&observables) {
                *slot = o.inner(&rho) * scale;
            }
            row.push(v);
        }
        records.push(row);
    }

    if noise.kind == NoiseKind::Gaussian && noise.sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let normal = Normal::new(0.0, noise.sigma).map_err(|e| NmrError::InvalidParameter(e.to_string()))?;
        for row in records.iter_mut() {
            for v in row.iter_mut() {
                for x in v.iter_mut() {
                    *x += normal.sample(&mut rng);
                }
            }
        }
    }

    let records = records.into_iter().map(|row| row.iter().map(SignalRecord::from_values).collect()).collect();
    Ok(Dataset::new((1..=PREPARATION_COUNT).collect(), times.to_vec(), records)?)
}
