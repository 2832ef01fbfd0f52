mod equilibrium;
mod generate;
mod params;
mod relaxation;

pub use equilibrium::{
    alpha_for_polarization, equilibrium_state, equilibrium_state_exact, hamiltonian, normalization_constant,
    preparation_population, pseudo_pure, rescaled_equilibrium, signal_scale,
};
pub use generate::{generate_dataset, physical_preparations};
pub use params::{log_time_grid, NoiseKind, NoiseSpec, RelaxationParams, SpinSystemParams, HBAR, K_B};
pub use relaxation::{
    commutation_sign, coupled_transverse, decay_rates, lindblad_rates, pauli_index, pauli_label, relaxation_channel,
    RelaxationModel,
};

use crate::qmap::QmapError;
use crate::tomography::DatasetError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NmrError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unphysical relaxation model: {0}")]
    Unphysical(String),
    #[error(transparent)]
    Qmap(#[from] QmapError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
