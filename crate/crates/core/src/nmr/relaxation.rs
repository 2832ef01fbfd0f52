use super::params::RelaxationParams;
use super::NmrError;
use crate::linalg::{c, pauli2, vectorize, Axis, CMatrix};
use crate::qmap::{reshuffle, ChoiMatrix, DensityEstimate, SuperoperatorMatrix};
use nalgebra::DMatrix;

pub const CP_EIGEN_TOL: f64 = 1e-10;

/// Pauli index a = 4i + j for σ_i ⊗ σ_j with axes ordered I, X, Y, Z.
pub fn pauli_index(a: Axis, b: Axis) -> usize {
    4 * (a as usize) + b as usize
}

pub fn pauli_label(index: usize) -> String {
    format!("{}{}", Axis::ALL[index / 4].symbol(), Axis::ALL[index % 4].symbol())
}

fn anticommute_1q(a: usize, b: usize) -> bool {
    a != 0 && b != 0 && a != b
}

/// +1 if the two-spin Paulis commute, −1 otherwise.
pub fn commutation_sign(p: usize, q: usize) -> f64 {
    let flips = anticommute_1q(p / 4, q / 4) as u8 + anticommute_1q(p % 4, q % 4) as u8;
    if flips % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The eight transverse two-spin channels σ_i⊗σ_j, i, j ≠ 𝟙, excluding zz.
pub fn coupled_transverse() -> Vec<usize> {
    let mut out = Vec::new();
    for a in Axis::XYZ {
        for b in Axis::XYZ {
            if (a, b) != (Axis::Z, Axis::Z) {
                out.push(pauli_index(a, b));
            }
        }
    }
    out
}

/// Lindblad rates r_P of the Pauli-diagonal generator L(ρ) = Σ r_P (PρP − ρ)
/// whose decay rates are γ; CP for all t iff every r_P ≥ 0.
pub fn lindblad_rates(gamma: &[f64; 16]) -> [f64; 16] {
    let mut r = [0.0; 16];
    for (p, slot) in r.iter_mut().enumerate().skip(1) {
        *slot = -(1..16).map(|q| commutation_sign(p, q) * gamma[q]).sum::<f64>() / 16.0;
    }
    r
}

fn rate(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        1.0 / t
    }
}

fn literal_rates(relax: &RelaxationParams) -> [f64; 16] {
    let mut g = [0.0; 16];
    g[pauli_index(Axis::X, Axis::I)] = rate(relax.t2_h);
    g[pauli_index(Axis::Y, Axis::I)] = rate(relax.t2_h);
    g[pauli_index(Axis::Z, Axis::I)] = rate(relax.t1_h);
    g[pauli_index(Axis::I, Axis::X)] = rate(relax.t2_c);
    g[pauli_index(Axis::I, Axis::Y)] = rate(relax.t2_c);
    g[pauli_index(Axis::I, Axis::Z)] = rate(relax.t1_c);
    g[pauli_index(Axis::Z, Axis::Z)] = rate(relax.t1_j);
    for q in coupled_transverse() {
        g[q] = rate(relax.t2_j);
    }
    g
}

const HILDRETH_SWEEPS: usize = 200_000;
const HILDRETH_TOL: f64 = 1e-14;

/// Euclidean projection of the uniform coupled-rate vector m·1 onto
/// {Lindblad rates ≥ 0, mean coupled rate = m}, by Hildreth's dual
/// coordinate ascent. Returns None when the set is empty.
fn project_coupled(base: &[f64; 16], m: f64) -> Option<Vec<f64>> {
    let coupled = coupled_transverse();
    let nc = coupled.len();
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for p in 1..16 {
        let fixed: f64 = (1..16)
            .filter(|q| !coupled.contains(q))
            .map(|q| -commutation_sign(p, q) * base[q] / 16.0)
            .sum();
        let b: Vec<f64> = coupled.iter().map(|&q| -commutation_sign(p, q) / 16.0).collect();
        let at_start: f64 = b.iter().sum::<f64>() * m;
        rows.push((b, -fixed - at_start, false));
    }
    rows.push((vec![1.0; nc], 0.0, true));

    let mut y = vec![0.0; nc];
    let mut lambda = vec![0.0; rows.len()];
    for _ in 0..HILDRETH_SWEEPS {
        let mut moved: f64 = 0.0;
        for (i, (b, e, equality)) in rows.iter().enumerate() {
            let nb: f64 = b.iter().map(|x| x * x).sum();
            if nb == 0.0 {
                continue;
            }
            let slack: f64 = e - b.iter().zip(&y).map(|(u, v)| u * v).sum::<f64>();
            let mut next = lambda[i] + slack / nb;
            if !equality {
                next = next.max(0.0);
            }
            let step = next - lambda[i];
            if step != 0.0 {
                for (yk, bk) in y.iter_mut().zip(b) {
                    *yk += step * bk;
                }
                lambda[i] = next;
                moved = moved.max(step.abs() * nb.sqrt());
            }
        }
        if moved < HILDRETH_TOL {
            break;
        }
    }
    let worst = rows
        .iter()
        .map(|(b, e, equality)| {
            let v = b.iter().zip(&y).map(|(u, w)| u * w).sum::<f64>() - e;
            if *equality {
                v.abs()
            } else {
                (-v).max(0.0)
            }
        })
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        return None;
    }
    Some(y.iter().map(|v| m + v).collect())
}

fn with_coupled(base: &[f64; 16], g: &[f64]) -> [f64; 16] {
    let mut out = *base;
    for (q, v) in coupled_transverse().into_iter().zip(g) {
        out[q] = *v;
    }
    out
}

/// Decay rates of the 15 Pauli expectations. When the literal assignment
/// (every coupled transverse channel at 1/t2_j) is not completely positive,
/// the coupled rates are replaced by the nearest CP-compatible rates whose
/// mean channel value exp(−γ t2_j) equals e⁻¹.
pub fn decay_rates(relax: &RelaxationParams) -> Result<([f64; 16], bool), NmrError> {
    relax.validate()?;
    let base = literal_rates(relax);
    let r = lindblad_rates(&base);
    if r.iter().all(|&x| x >= -1e-15) {
        return Ok((base, false));
    }
    let t2j = relax.t2_j;
    let m0 = rate(t2j);
    let unphysical = || {
        let (idx, val) = r.iter().enumerate().skip(1).fold((1, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        NmrError::Unphysical(format!("Lindblad rate for {} is {val:e} and no CP projection exists", pauli_label(idx)))
    };
    let mean_decay = |g: &[f64]| g.iter().map(|x| (-x * t2j).exp()).sum::<f64>() / g.len() as f64;
    let target = (-1.0f64).exp();

    let mut lo = m0;
    let mut g_lo = project_coupled(&base, lo).ok_or_else(unphysical)?;
    if mean_decay(&g_lo) <= target {
        return Ok((with_coupled(&base, &g_lo), true));
    }
    let mut hi = m0;
    let mut g_hi;
    loop {
        hi *= 1.02;
        g_hi = project_coupled(&base, hi).ok_or_else(unphysical)?;
        if mean_decay(&g_hi) <= target {
            break;
        }
        if hi > 10.0 * m0 {
            return Err(unphysical());
        }
        lo = hi;
        g_lo = g_hi.clone();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = project_coupled(&base, mid).ok_or_else(unphysical)?;
        if mean_decay(&g_mid) > target {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    let pick = if (mean_decay(&g_lo) - target).abs() <= (mean_decay(&g_hi) - target).abs() { g_lo } else { g_hi };
    Ok((with_coupled(&base, &pick), true))
}

/// Pauli-diagonal affine relaxation toward a fixed equilibrium state.
#[derive(Debug, Clone)]
pub struct RelaxationModel {
    pub rates: [f64; 16],
    /// Whether the coupled transverse rates were adjusted for complete positivity.
    pub projected: bool,
    eq_pauli: [f64; 16],
    pauli_vecs: Vec<nalgebra::DVector<crate::linalg::C64>>,
}

impl RelaxationModel {
    pub fn new(relax: &RelaxationParams, eq: &DensityEstimate) -> Result<Self, NmrError> {
        let (rates, projected) = decay_rates(relax)?;
        let mut eq_pauli = [0.0; 16];
        let mut pauli_vecs = Vec::with_capacity(16);
        for a in Axis::ALL {
            for b in Axis::ALL {
                let p = pauli2(a, b);
                eq_pauli[pauli_index(a, b)] = eq.matrix().expectation(&p) / eq.trace();
                pauli_vecs.push(vectorize(&p));
            }
        }
        Ok(Self { rates, projected, eq_pauli, pauli_vecs })
    }

    /// Action on Pauli coordinates x_a = tr(ρ P_a): x_a ↦ λ_a x_a + (1 − λ_a) p_a x_0.
    pub fn transfer_matrix(&self, t: f64) -> DMatrix<f64> {
        let mut r = DMatrix::zeros(16, 16);
        r[(0, 0)] = 1.0;
        for a in 1..16 {
            let lam = (-self.rates[a] * t).exp();
            r[(a, a)] = lam;
            r[(a, 0)] = (1.0 - lam) * self.eq_pauli[a];
        }
        r
    }

    pub fn superoperator(&self, t: f64) -> SuperoperatorMatrix {
        let r = self.transfer_matrix(t);
        let mut phi = CMatrix::zeros(16, 16);
        for a in 0..16 {
            for b in 0..16 {
                if r[(a, b)] != 0.0 {
                    phi += (&self.pauli_vecs[a] * self.pauli_vecs[b].adjoint()) * c(0.25 * r[(a, b)], 0.0);
                }
            }
        }
        SuperoperatorMatrix::new(phi).expect("16x16 superoperator")
    }

    pub fn channel(&self, t: f64) -> Result<ChoiMatrix, NmrError> {
        if !(t >= 0.0) {
            return Err(NmrError::InvalidParameter(format!("time must be nonnegative, got {t}")));
        }
        let choi = reshuffle(&self.superoperator(t));
        let min = choi.matrix().min_eigenvalue();
        if min < -CP_EIGEN_TOL {
            return Err(NmrError::Unphysical(format!("channel at t = {t} s has Choi eigenvalue {min:e}")));
        }
        Ok(choi)
    }
}

pub fn relaxation_channel(relax: &RelaxationParams, eq: &DensityEstimate, t: f64) -> Result<ChoiMatrix, NmrError> {
    RelaxationModel::new(relax, eq)?.channel(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;
    use crate::nmr::equilibrium::{equilibrium_state, rescaled_equilibrium};
    use crate::nmr::params::SpinSystemParams;
    use crate::qmap::{apply_map, unitality_deviation};
    use proptest::prelude::*;

    fn eq() -> DensityEstimate {
        equilibrium_state(&SpinSystemParams::default())
    }

    fn pauli_generator_oracle(r: &[f64; 16]) -> [f64; 16] {
        let mut gamma = [0.0; 16];
        for (q, g) in gamma.iter_mut().enumerate().skip(1) {
            *g = (1..16).map(|p| r[p] * (1.0 - commutation_sign(p, q))).sum();
        }
        gamma
    }

    #[test]
    fn commutation_table() {
        let xz = pauli_index(Axis::X, Axis::Z);
        for q in 0..16 {
            let (a, b) = (pauli2(Axis::ALL[xz / 4], Axis::ALL[xz % 4]), pauli2(Axis::ALL[q / 4], Axis::ALL[q % 4]));
            let comm = (&a * &b - &b * &a).norm() < 1e-12;
            assert_eq!(commutation_sign(xz, q) > 0.0, comm, "q = {}", pauli_label(q));
        }
    }

    #[test]
    fn lindblad_inversion_matches_forward_generator() {
        let (gamma, _) = decay_rates(&RelaxationParams::default()).unwrap();
        let back = pauli_generator_oracle(&lindblad_rates(&gamma));
        for q in 1..16 {
            assert!((back[q] - gamma[q]).abs() < 1e-12);
        }
    }

    #[test]
    fn literal_table_rates_are_not_cp_and_get_projected() {
        let literal = literal_rates(&RelaxationParams::default());
        let r = lindblad_rates(&literal);
        assert!(r[pauli_index(Axis::X, Axis::Z)] < -0.04);
        assert!(r[pauli_index(Axis::Z, Axis::X)] < -0.17);
        let (gamma, projected) = decay_rates(&RelaxationParams::default()).unwrap();
        assert!(projected);
        assert!(lindblad_rates(&gamma).iter().all(|&v| v >= -1e-12));
        let t2j = RelaxationParams::default().t2_j;
        let mean: f64 = coupled_transverse().iter().map(|&q| (-gamma[q] * t2j).exp()).sum::<f64>() / 8.0;
        assert!((mean - (-1.0f64).exp()).abs() < 1e-10);
        for q in 1..16 {
            if !coupled_transverse().contains(&q) {
                assert_eq!(gamma[q], literal[q]);
            }
        }
    }

    #[test]
    fn cp_compatible_rates_are_left_alone() {
        let relax = RelaxationParams { t1_h: 1.0, t2_h: 1.0, t1_c: 1.0, t2_c: 1.0, t1_j: 0.5, t2_j: 0.5 };
        let (gamma, projected) = decay_rates(&relax).unwrap();
        assert!(!projected);
        let model = RelaxationModel::new(&relax, &eq()).unwrap();
        let r = model.transfer_matrix(relax.t2_j);
        for q in coupled_transverse() {
            assert!((r[(q, q)] - (-1.0f64).exp()).abs() < 1e-15);
            assert!((gamma[q] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let model = RelaxationModel::new(&RelaxationParams::default(), &eq()).unwrap();
        let choi = model.channel(0.0).unwrap();
        let id = reshuffle(&SuperoperatorMatrix::identity(4));
        assert!(choi.matrix().sub(id.matrix()).frobenius_norm() < 1e-14);
        assert!(model.channel(-1.0).is_err());
    }

    #[test]
    fn long_time_maps_everything_to_equilibrium() {
        let e = eq();
        let model = RelaxationModel::new(&RelaxationParams::default(), &e).unwrap();
        let phi = model.superoperator(1e4);
        let prep = DensityEstimate::new(HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        let out = apply_map(&phi, &prep).unwrap();
        assert!(out.sub(e.matrix()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn unitality_deviation_grows_and_saturates() {
        let model = RelaxationModel::new(&RelaxationParams::default(), &eq()).unwrap();
        let mut prev = -1.0;
        let series: Vec<f64> = (0..60).map(|i| unitality_deviation(&model.channel(0.5 * i as f64).unwrap())).collect();
        assert!(series[0] < 1e-15);
        for v in &series {
            assert!(*v >= prev);
            prev = *v;
        }
        let late = unitality_deviation(&model.channel(1e3).unwrap());
        assert!((late - series[59]) / late < 0.01);
    }

    #[test]
    fn unreachable_parameters_are_rejected() {
        let relax = RelaxationParams { t2_h: 1e-3, t1_h: 1e-3, t2_c: 1e3, t1_c: 1e3, t1_j: 1e3, t2_j: 1e3 };
        assert!(matches!(decay_rates(&relax), Err(NmrError::Unphysical(_))));
    }

    #[test]
    fn rescaled_frame_is_also_a_fixed_point() {
        let e = rescaled_equilibrium(&SpinSystemParams::default());
        let model = RelaxationModel::new(&RelaxationParams::default(), &e).unwrap();
        let out = apply_map(&model.superoperator(3.0), &e).unwrap();
        assert!(out.sub(e.matrix()).frobenius_norm() < 1e-12);
    }

    fn relax_strategy() -> impl Strategy<Value = RelaxationParams> {
        (0.5f64..20.0, 0.05f64..1.0, 0.5f64..20.0, 0.05f64..1.0, 0.5f64..20.0, 0.05f64..1.0).prop_map(
            |(t1h, f2h, t1c, f2c, t1j, f2j)| RelaxationParams {
                t1_h: t1h,
                t2_h: f2h * t1h,
                t1_c: t1c,
                t2_c: f2c * t1c,
                t1_j: t1j,
                t2_j: f2j * t1j,
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn channel_is_cp_on_a_time_grid(relax in relax_strategy()) {
            let e = eq();
            if let Ok(model) = RelaxationModel::new(&relax, &e) {
                for t in [0.0, 1e-4, 1e-2, 0.1, 0.5, 2.0, 10.0, 100.0] {
                    let choi = reshuffle(&model.superoperator(t));
                    prop_assert!(choi.matrix().min_eigenvalue() >= -1e-10, "t = {}", t);
                }
            }
        }

        #[test]
        fn semigroup_property(t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
            let model = RelaxationModel::new(&RelaxationParams::default(), &eq()).unwrap();
            let joint = model.superoperator(t1 + t2);
            let composed = model.superoperator(t2).after(&model.superoperator(t1));
            prop_assert!((joint.matrix - composed.matrix).norm() < 1e-9);
        }

        #[test]
        fn equilibrium_is_fixed(t in 0.0f64..100.0) {
            let e = eq();
            let model = RelaxationModel::new(&RelaxationParams::default(), &e).unwrap();
            let out = apply_map(&model.superoperator(t), &e).unwrap();
            prop_assert!(out.sub(e.matrix()).frobenius_norm() < 1e-10);
        }
    }
}
