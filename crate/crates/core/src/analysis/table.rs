use super::fit::{fit_exponential, FitResult};
use super::series::{average_magnetization, evolved_states, DecaySeries};
use super::AnalysisError;
use crate::linalg::{Axis, HermitianMatrix};
use crate::qmap::DensityEstimate;
use crate::tomography::ProcessEstimate;

const TRANSVERSE: [Axis; 2] = [Axis::X, Axis::Y];

/// Row labels in output order: longitudinal then transverse, for H, C and the coupling.
pub const TABLE_ROWS: [&str; 6] = ["H-T1", "H-T2", "C-T1", "C-T2", "J-T1", "J-T2"];

/// Axis pairs averaged with equal weights for each row.
fn row_channels(row: usize) -> Vec<(Axis, Axis)> {
    match row {
        0 => vec![(Axis::Z, Axis::I)],
        1 => TRANSVERSE.iter().map(|&a| (a, Axis::I)).collect(),
        2 => vec![(Axis::I, Axis::Z)],
        3 => TRANSVERSE.iter().map(|&a| (Axis::I, a)).collect(),
        4 => vec![(Axis::Z, Axis::Z)],
        _ => Axis::XYZ
            .iter()
            .flat_map(|&a| Axis::XYZ.iter().map(move |&b| (a, b)))
            .filter(|&p| p != (Axis::Z, Axis::Z))
            .collect(),
    }
}

#[derive(Debug, Clone)]
pub struct RelaxationRow {
    pub label: &'static str,
    pub series: DecaySeries,
    pub fit: Result<FitResult, AnalysisError>,
}

/// The six averaged magnetization series built from Φ_k(ρ₀ˡ).
pub fn relaxation_series(
    times: &[f64],
    estimates: &[&ProcessEstimate],
    preparations: &[DensityEstimate],
    eq: &DensityEstimate,
) -> Result<Vec<DecaySeries>, AnalysisError> {
    let mut t = Vec::with_capacity(estimates.len());
    let mut values = vec![Vec::with_capacity(estimates.len()); TABLE_ROWS.len()];
    for e in estimates {
        t.push(*times.get(e.time_index).ok_or_else(|| AnalysisError::Shape(format!("time index {} out of range", e.time_index)))?);
        let states: Vec<HermitianMatrix> = evolved_states(e, preparations)?;
        for (row, out) in values.iter_mut().enumerate() {
            let channels = row_channels(row);
            let mut acc = 0.0;
            for &(i, j) in &channels {
                acc += average_magnetization(&states, eq.matrix(), i, j)?;
            }
            out.push(acc / channels.len() as f64);
        }
    }
    TABLE_ROWS.iter().zip(values).map(|(label, v)| DecaySeries::new(t.clone(), v, *label)).collect()
}

/// Fits every series of `relaxation_series`; failures are kept per row.
pub fn relaxation_table(
    times: &[f64],
    estimates: &[&ProcessEstimate],
    preparations: &[DensityEstimate],
    eq: &DensityEstimate,
) -> Result<Vec<RelaxationRow>, AnalysisError> {
    let series = relaxation_series(times, estimates, preparations, eq)?;
    Ok(TABLE_ROWS
        .iter()
        .zip(series)
        .map(|(&label, series)| {
            let fit = fit_exponential(&series, None);
            RelaxationRow { label, series, fit }
        })
        .collect())
}
