use super::AnalysisError;
use crate::linalg::{pauli2, Axis, HermitianMatrix};
use crate::qmap::{apply_map, tp_deviation, trace_distance, unitality_deviation, DensityEstimate, QmapError};
use crate::tomography::ProcessEstimate;

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub channel_label: String,
}

impl DecaySeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, channel_label: impl Into<String>) -> Result<Self, AnalysisError> {
        if times.len() != values.len() {
            return Err(AnalysisError::Shape(format!("{} times vs {} values", times.len(), values.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AnalysisError::Shape("times must be strictly increasing".into()));
        }
        Ok(Self { times, values, channel_label: channel_label.into() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// sqrt(Σ_l [tr(ρ_l σ_i⊗σ_j) − tr(ρ_eq σ_i⊗σ_j)]²) / #l, where `Axis::I` is the identity.
pub fn average_magnetization(
    states: &[HermitianMatrix],
    eq: &HermitianMatrix,
    i: Axis,
    j: Axis,
) -> Result<f64, AnalysisError> {
    if i == Axis::I && j == Axis::I {
        return Err(AnalysisError::Shape("at least one axis must differ from the identity".into()));
    }
    if states.is_empty() {
        return Err(AnalysisError::Shape("no states to average".into()));
    }
    let p = pauli2(i, j);
    let reference = eq.expectation(&p);
    let sum: f64 = states.iter().map(|s| (s.expectation(&p) - reference).powi(2)).sum();
    Ok(sum.sqrt() / states.len() as f64)
}

/// Φ_k(ρ₀ˡ) for every preparation.
pub fn evolved_states(
    estimate: &ProcessEstimate,
    preparations: &[DensityEstimate],
) -> Result<Vec<HermitianMatrix>, QmapError> {
    preparations.iter().map(|p| apply_map(&estimate.superop, p)).collect()
}

fn estimate_times(times: &[f64], estimates: &[&ProcessEstimate]) -> Result<Vec<f64>, AnalysisError> {
    estimates
        .iter()
        .map(|e| {
            times
                .get(e.time_index)
                .copied()
                .ok_or_else(|| AnalysisError::Shape(format!("time index {} out of range", e.time_index)))
        })
        .collect()
}

/// TP and unitality deviation of each D_k against time.
pub fn map_property_series(
    times: &[f64],
    estimates: &[&ProcessEstimate],
) -> Result<(DecaySeries, DecaySeries), AnalysisError> {
    let t = estimate_times(times, estimates)?;
    let tp = estimates.iter().map(|e| tp_deviation(&e.choi)).collect();
    let un = estimates.iter().map(|e| unitality_deviation(&e.choi)).collect();
    Ok((DecaySeries::new(t.clone(), tp, "tp-deviation")?, DecaySeries::new(t, un, "unitality-deviation")?))
}

/// Trace distance between Φ_k(ρ₀ˡ) and `eq`, one series per preparation.
pub fn trace_distance_series(
    times: &[f64],
    estimates: &[&ProcessEstimate],
    preparations: &[DensityEstimate],
    eq: &DensityEstimate,
) -> Result<Vec<DecaySeries>, AnalysisError> {
    let t = estimate_times(times, estimates)?;
    let mut values = vec![Vec::with_capacity(estimates.len()); preparations.len()];
    for e in estimates {
        for (l, out) in evolved_states(e, preparations)?.iter().enumerate() {
            values[l].push(trace_distance(out, eq.matrix()));
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(l, v)| DecaySeries::new(t.clone(), v, format!("prep-{:02}", l + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use proptest::prelude::*;

    fn diag_state(z: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[0.25 + z, 0.25, 0.25, 0.25 - z])
    }

    #[test]
    fn equilibrium_states_give_zero() {
        let eq = diag_state(0.1);
        let states = vec![eq.clone(); 20];
        for (i, j) in [(Axis::Z, Axis::I), (Axis::X, Axis::Y), (Axis::I, Axis::Z)] {
            assert_eq!(average_magnetization(&states, &eq, i, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_state_deviation() {
        let eq = diag_state(0.0);
        let s = diag_state(0.2);
        // ZI expectation of diag(a,b,c,d) is a+b−c−d.
        let v = average_magnetization(&[s], &eq, Axis::Z, Axis::I).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        assert!(average_magnetization(&[], &eq, Axis::Z, Axis::I).is_err());
        assert!(average_magnetization(&[eq.clone()], &eq, Axis::I, Axis::I).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(DecaySeries::new(vec![0.0, 1.0], vec![1.0], "x").is_err());
        assert!(DecaySeries::new(vec![0.0, 0.0], vec![1.0, 1.0], "x").is_err());
        assert_eq!(DecaySeries::new(vec![0.0, 1.0], vec![1.0, 0.5], "x").unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn magnetization_is_symmetric(zs in proptest::collection::vec(-0.2f64..0.2, 2..8), xs in proptest::collection::vec(-0.2f64..0.2, 8), shift in 0usize..8) {
            let eq = diag_state(0.05);
            let states: Vec<HermitianMatrix> = zs.iter().zip(&xs).map(|(&z, &x)| {
                let mut m = diag_state(z).into_matrix();
                m[(0, 1)] = c(x * 0.1, 0.0);
                m[(1, 0)] = c(x * 0.1, 0.0);
                HermitianMatrix::new(m).unwrap()
            }).collect();
            let mut rotated = states.clone();
            rotated.rotate_left(shift % states.len());
            rotated.reverse();
            for (i, j) in [(Axis::Z, Axis::I), (Axis::X, Axis::Z), (Axis::Z, Axis::Z)] {
                let a = average_magnetization(&states, &eq, i, j).unwrap();
                let b = average_magnetization(&rotated, &eq, i, j).unwrap();
                prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
                prop_assert!(a >= 0.0);
            }
        }
    }
}
