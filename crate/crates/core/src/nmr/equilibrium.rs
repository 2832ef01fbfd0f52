use super::params::{SpinSystemParams, HBAR, K_B};
use super::NmrError;
use crate::linalg::{c, pauli2, Axis, CMatrix, HermitianMatrix, C64};
use crate::qmap::DensityEstimate;
use nalgebra::DVector;
use std::f64::consts::PI;

fn s_z() -> CMatrix {
    crate::linalg::pauli(Axis::Z) * c(0.5, 0.0)
}

/// H = −ħω_H S_z⊗𝟙 − ħω_C 𝟙⊗S_z + 2πħJ S_z⊗S_z.
pub fn hamiltonian(params: &SpinSystemParams) -> HermitianMatrix {
    let id = CMatrix::identity(2, 2);
    let h = s_z().kronecker(&id) * c(-HBAR * params.omega_h, 0.0)
        + id.kronecker(&s_z()) * c(-HBAR * params.omega_c, 0.0)
        + s_z().kronecker(&s_z()) * c(2.0 * PI * HBAR * params.j_coupling, 0.0);
    HermitianMatrix::symmetrized(h)
}

/// High-temperature expansion of the thermal state, keeping the coupling term.
pub fn equilibrium_state(params: &SpinSystemParams) -> DensityEstimate {
    let kt = K_B * params.temperature;
    let id = CMatrix::identity(2, 2);
    let rho = CMatrix::identity(4, 4) * c(0.25, 0.0)
        + s_z().kronecker(&id) * c(0.25 * HBAR * params.omega_h / kt, 0.0)
        + id.kronecker(&s_z()) * c(0.25 * HBAR * params.omega_c / kt, 0.0)
        + s_z().kronecker(&s_z()) * c(0.5 * HBAR * PI * params.j_coupling / kt, 0.0);
    DensityEstimate::new(HermitianMatrix::symmetrized(rho)).expect("thermal state is a valid density estimate")
}

/// exp(−H/k_BT)/Z evaluated on the diagonal Hamiltonian.
pub fn equilibrium_state_exact(params: &SpinSystemParams) -> DensityEstimate {
    let h = hamiltonian(params);
    let kt = K_B * params.temperature;
    let energies: Vec<f64> = (0..4).map(|i| h.matrix()[(i, i)].re).collect();
    let shift = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - shift) / kt).exp()).collect();
    let z: f64 = weights.iter().sum();
    let diag: Vec<f64> = weights.iter().map(|w| w / z).collect();
    DensityEstimate::new(HermitianMatrix::from_real_diagonal(&diag)).expect("Gibbs state is a valid density estimate")
}

/// M = ħ(ω_H + ω_C + 2πJ)/(4k_BT).
pub fn normalization_constant(params: &SpinSystemParams) -> f64 {
    HBAR * (params.omega_h + params.omega_c + 2.0 * PI * params.j_coupling) / (4.0 * K_B * params.temperature)
}

/// Maps a physical expectation value to the normalized signal scale.
pub fn signal_scale(params: &SpinSystemParams) -> f64 {
    1.0 / (2.0 * normalization_constant(params))
}

/// Population fraction of the pseudo-pure preparations on the normalized scale.
pub fn preparation_population(params: &SpinSystemParams) -> f64 {
    params.epsilon_scale * signal_scale(params)
}

/// Equilibrium state on the normalized signal scale: the minimum-trace PSD
/// matrix whose Pauli expectations are the normalized equilibrium signals.
pub fn rescaled_equilibrium(params: &SpinSystemParams) -> DensityEstimate {
    let eq = equilibrium_state(params);
    let scale = signal_scale(params);
    let mut r = CMatrix::zeros(4, 4);
    for a in Axis::ALL {
        for b in Axis::ALL {
            if (a, b) == (Axis::I, Axis::I) {
                continue;
            }
            let p = pauli2(a, b);
            let v = eq.matrix().expectation(&p) * scale;
            r += p * c(v, 0.0);
        }
    }
    let r = HermitianMatrix::symmetrized(r);
    let shift = -r.min_eigenvalue();
    let rho = r.add(&HermitianMatrix::identity(4).scale(shift)).scale(0.25);
    DensityEstimate::new(rho).expect("rescaled equilibrium has unit-order trace")
}

/// ρ_pp = [(1−α)𝟙 + 2α|ψ⟩⟨ψ|]/[(1−α)·4 + 2α].
pub fn pseudo_pure(psi: &DVector<C64>, alpha: f64) -> Result<DensityEstimate, NmrError> {
    let norm = psi.norm();
    if psi.len() != 4 || (norm - 1.0).abs() > 1e-10 {
        return Err(NmrError::InvalidParameter(format!("state vector must be a unit 4-vector (norm {norm})")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(NmrError::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let num = CMatrix::identity(4, 4) * c(1.0 - alpha, 0.0) + (psi * psi.adjoint()) * c(2.0 * alpha, 0.0);
    let den = (1.0 - alpha) * 4.0 + 2.0 * alpha;
    Ok(DensityEstimate::new(HermitianMatrix::symmetrized(num * c(1.0 / den, 0.0)))?)
}

/// Pseudo-pure parameter α giving polarization ε, i.e. ρ = 𝟙/4 + ε(|ψ⟩⟨ψ| − 𝟙/4).
pub fn alpha_for_polarization(epsilon: f64) -> f64 {
    2.0 * epsilon / (1.0 + epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(h: &HermitianMatrix) -> Vec<f64> {
        (0..h.dim()).map(|i| h.matrix()[(i, i)].re).collect()
    }

    #[test]
    fn hamiltonian_without_coupling() {
        let p = SpinSystemParams { j_coupling: 1e-300, ..SpinSystemParams::default() };
        let d = diag(&hamiltonian(&p));
        let (wh, wc) = (p.omega_h, p.omega_c);
        let want = [-(wh + wc) / 2.0, -(wh - wc) / 2.0, (wh - wc) / 2.0, (wh + wc) / 2.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - HBAR * b).abs() < 1e-12 * HBAR * wh);
        }
        assert!(hamiltonian(&p).matrix().iter().enumerate().all(|(k, z)| k % 5 == 0 || z.norm() == 0.0));
    }

    #[test]
    fn hamiltonian_coupling_only() {
        let p = SpinSystemParams { omega_h: 0.0, omega_c: 0.0, j_coupling: 100.0, ..SpinSystemParams::default() };
        let d = diag(&hamiltonian(&p));
        let unit = PI * HBAR * 100.0 / 2.0;
        for (a, s) in d.iter().zip([1.0, -1.0, -1.0, 1.0]) {
            assert!((a - s * unit).abs() < 1e-15 * unit);
        }
    }

    #[test]
    fn coupling_is_tiny_against_zeeman() {
        let p = SpinSystemParams::default();
        let id = CMatrix::identity(2, 2);
        let zeeman = s_z().kronecker(&id) * c(-HBAR * p.omega_h, 0.0) + id.kronecker(&s_z()) * c(-HBAR * p.omega_c, 0.0);
        let coupling = s_z().kronecker(&s_z()) * c(2.0 * PI * HBAR * p.j_coupling, 0.0);
        assert!(coupling.norm() / zeeman.norm() < 1e-5);
    }

    #[test]
    fn equilibrium_trace_and_high_temperature_limit() {
        let p = SpinSystemParams::default();
        assert!((equilibrium_state(&p).trace() - 1.0).abs() < 1e-15);
        let hot = SpinSystemParams { temperature: 1e30, ..p };
        let rho = equilibrium_state(&hot);
        assert!(rho.matrix().sub(&HermitianMatrix::identity(4).scale(0.25)).frobenius_norm() < 1e-20);
    }

    #[test]
    fn expansion_matches_exponential() {
        let p = SpinSystemParams::default();
        let a = equilibrium_state(&p);
        let b = equilibrium_state_exact(&p);
        let worst = a.matrix().sub(b.matrix()).matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "entrywise gap {worst}");
    }

    #[test]
    fn normalization_constant_regression() {
        let p = SpinSystemParams::default();
        let m = normalization_constant(&p);
        let direct = 1.054_571_817e-34 * (2.0 * PI * 625e6 + 2.0 * PI * 215.0) / (4.0 * 1.380_649e-23 * 300.0);
        assert!((m - direct).abs() < 1e-20);
        assert!((m - 2.499_606_625_711_067e-5).abs() < 1e-18, "M = {m:e}");
        let doubled = SpinSystemParams { omega_h: 2.0 * p.omega_h, ..p };
        let gap = normalization_constant(&doubled) - m;
        assert!((gap - HBAR * p.omega_h / (4.0 * K_B * p.temperature)).abs() < 1e-18);
    }

    #[test]
    fn pseudo_pure_limits() {
        let mut psi = DVector::<C64>::zeros(4);
        psi[0] = c(1.0, 0.0);
        let mixed = pseudo_pure(&psi, 0.0).unwrap();
        assert!(mixed.matrix().sub(&HermitianMatrix::identity(4).scale(0.25)).frobenius_norm() < 1e-15);
        let pure = pseudo_pure(&psi, 1.0).unwrap();
        assert!(pure.matrix().sub(&HermitianMatrix::outer(&psi)).frobenius_norm() < 1e-15);
        let a = 1e-5;
        let d = diag(pseudo_pure(&psi, a).unwrap().matrix());
        let den = (1.0 - a) * 4.0 + 2.0 * a;
        assert!((d[0] - (1.0 + a) / den).abs() < 1e-16);
        assert!((d[3] - (1.0 - a) / den).abs() < 1e-16);
        assert!(pseudo_pure(&(psi.clone() * c(2.0, 0.0)), 0.5).is_err());
    }

    #[test]
    fn alpha_gives_requested_polarization() {
        let mut psi = DVector::<C64>::zeros(4);
        psi[2] = c(1.0, 0.0);
        let eps = 4.75e-5;
        let rho = pseudo_pure(&psi, alpha_for_polarization(eps)).unwrap();
        let want = HermitianMatrix::identity(4).scale(0.25).add(&HermitianMatrix::outer(&psi).sub(&HermitianMatrix::identity(4).scale(0.25)).scale(eps));
        assert!(rho.matrix().sub(&want).frobenius_norm() < 1e-16);
    }

    #[test]
    fn rescaled_equilibrium_signals() {
        let p = SpinSystemParams::default();
        let eq = rescaled_equilibrium(&p);
        let total = p.omega_h + p.omega_c + 2.0 * PI * p.j_coupling;
        let zi = eq.matrix().expectation(&pauli2(Axis::Z, Axis::I));
        let iz = eq.matrix().expectation(&pauli2(Axis::I, Axis::Z));
        let zz = eq.matrix().expectation(&pauli2(Axis::Z, Axis::Z));
        assert!((zi - p.omega_h / total).abs() < 1e-9);
        assert!((iz - p.omega_c / total).abs() < 1e-9);
        assert!((zz - PI * p.j_coupling / total).abs() < 1e-9);
        assert!(eq.matrix().min_eigenvalue().abs() < 1e-12);
        assert!(eq.trace() <= 1.0);
    }
}
