use crate::linalg::{pauli2, Axis, CMatrix, HermitianMatrix};
use std::collections::BTreeMap;
use thiserror::Error;

pub const PREPARATION_COUNT: usize = 20;
pub const SIGNAL_BOUND: f64 = 10.0;

pub const CHANNELS: [&str; 15] = [
    "Hx", "Hy", "Hz", "Cx", "Cy", "Cz", "Jxx", "Jxy", "Jxz", "Jyx", "Jyy", "Jyz", "Jzx", "Jzy", "Jzz",
];

/// Pauli factors (proton, carbon) measured by each channel, in `CHANNELS` order.
pub const CHANNEL_AXES: [(Axis, Axis); 15] = [
    (Axis::X, Axis::I),
    (Axis::Y, Axis::I),
    (Axis::Z, Axis::I),
    (Axis::I, Axis::X),
    (Axis::I, Axis::Y),
    (Axis::I, Axis::Z),
    (Axis::X, Axis::X),
    (Axis::X, Axis::Y),
    (Axis::X, Axis::Z),
    (Axis::Y, Axis::X),
    (Axis::Y, Axis::Y),
    (Axis::Y, Axis::Z),
    (Axis::Z, Axis::X),
    (Axis::Z, Axis::Y),
    (Axis::Z, Axis::Z),
];

pub fn channel_index(name: &str) -> Option<usize> {
    CHANNELS.iter().position(|c| *c == name)
}

pub fn channel_observable(channel: usize) -> HermitianMatrix {
    let (a, b) = CHANNEL_AXES[channel];
    HermitianMatrix::new(pauli2(a, b)).expect("Pauli products are Hermitian")
}

pub fn channel_observables() -> Vec<HermitianMatrix> {
    (0..CHANNELS.len()).map(channel_observable).collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("expected {expected} preparations labelled 1..={expected}, found {found:?}")]
    Preparations { expected: usize, found: Vec<usize> },
    #[error("time grid must start at 0 and increase strictly (index {index}: {value})")]
    Times { index: usize, value: f64 },
    #[error("missing record for preparation {prep}, time index {k}, channel {channel}")]
    Missing { prep: usize, k: usize, channel: String },
    #[error("duplicate record for preparation {prep}, time index {k}, channel {channel}")]
    Duplicate { prep: usize, k: usize, channel: String },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("value for preparation {prep}, time index {k}, channel {channel} is {value} (must be finite with |value| <= 10)")]
    BadValue { prep: usize, k: usize, channel: String, value: f64 },
    #[error("time index {k} has inconsistent times {first} and {second}")]
    InconsistentTime { k: usize, first: f64, second: f64 },
    #[error("record table has shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape { rows: usize, cols: usize, want_rows: usize, want_cols: usize },
}

/// Equilibrium-normalized signals for one preparation at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRecord {
    pub h: [f64; 3],
    pub c: [f64; 3],
    pub j: [f64; 9],
}

impl SignalRecord {
    pub fn from_values(v: &[f64; 15]) -> Self {
        let mut r = Self { h: [0.0; 3], c: [0.0; 3], j: [0.0; 9] };
        r.h.copy_from_slice(&v[0..3]);
        r.c.copy_from_slice(&v[3..6]);
        r.j.copy_from_slice(&v[6..15]);
        r
    }

    pub fn values(&self) -> [f64; 15] {
        let mut v = [0.0; 15];
        v[0..3].copy_from_slice(&self.h);
        v[3..6].copy_from_slice(&self.c);
        v[6..15].copy_from_slice(&self.j);
        v
    }

    /// Signals of a state: tr(ρ · observable) per channel.
    pub fn of_state(rho: &HermitianMatrix) -> Self {
        let mut v = [0.0; 15];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rho.expectation(&observable_matrix(k));
        }
        Self::from_values(&v)
    }
}

fn observable_matrix(k: usize) -> CMatrix {
    let (a, b) = CHANNEL_AXES[k];
    pauli2(a, b)
}

/// Signals for 20 preparations over a time grid; `records[l-1][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    preparations: Vec<usize>,
    times: Vec<f64>,
    records: Vec<Vec<SignalRecord>>,
}

fn check_times(times: &[f64]) -> Result<(), DatasetError> {
    match times.first() {
        Some(&t0) if t0 == 0.0 => {}
        Some(&t0) => return Err(DatasetError::Times { index: 0, value: t0 }),
        None => return Err(DatasetError::Times { index: 0, value: f64::NAN }),
    }
    for (i, pair) in times.windows(2).enumerate() {
        if !(pair[1] > pair[0]) || !pair[1].is_finite() {
            return Err(DatasetError::Times { index: i + 1, value: pair[1] });
        }
    }
    Ok(())
}

impl Dataset {
    pub fn new(preparations: Vec<usize>, times: Vec<f64>, records: Vec<Vec<SignalRecord>>) -> Result<Self, DatasetError> {
        if preparations != (1..=PREPARATION_COUNT).collect::<Vec<_>>() {
            return Err(DatasetError::Preparations { expected: PREPARATION_COUNT, found: preparations });
        }
        check_times(&times)?;
        let cols = records.first().map(|r| r.len()).unwrap_or(0);
        if records.len() != PREPARATION_COUNT || records.iter().any(|r| r.len() != times.len()) {
            return Err(DatasetError::Shape { rows: records.len(), cols, want_rows: PREPARATION_COUNT, want_cols: times.len() });
        }
        for (l, row) in records.iter().enumerate() {
            for (k, rec) in row.iter().enumerate() {
                for (ch, &value) in rec.values().iter().enumerate() {
                    if !value.is_finite() || value.abs() > SIGNAL_BOUND {
                        return Err(DatasetError::BadValue { prep: l + 1, k, channel: CHANNELS[ch].into(), value });
                    }
                }
            }
        }
        Ok(Self { preparations, times, records })
    }

    /// Builds a dataset from flat (prep, k, time, channel, value) rows, in any order.
    pub fn from_rows<I>(rows: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (usize, usize, f64, String, f64)>,
    {
        let mut cells: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        let mut times: BTreeMap<usize, f64> = BTreeMap::new();
        for (prep, k, t, channel, value) in rows {
            let ch = channel_index(&channel).ok_or_else(|| DatasetError::UnknownChannel(channel.clone()))?;
            if prep == 0 || prep > PREPARATION_COUNT {
                return Err(DatasetError::Preparations { expected: PREPARATION_COUNT, found: vec![prep] });
            }
            if let Some(&first) = times.get(&k) {
                if first != t {
                    return Err(DatasetError::InconsistentTime { k, first, second: t });
                }
            } else {
                times.insert(k, t);
            }
            if cells.insert((prep, k, ch), value).is_some() {
                return Err(DatasetError::Duplicate { prep, k, channel });
            }
        }
        let n_times = times.keys().next_back().map(|k| k + 1).unwrap_or(0);
        let mut grid = Vec::with_capacity(n_times);
        for k in 0..n_times {
            match times.get(&k) {
                Some(&t) => grid.push(t),
                None => return Err(DatasetError::Missing { prep: 1, k, channel: CHANNELS[0].into() }),
            }
        }
        let mut records = Vec::with_capacity(PREPARATION_COUNT);
        for prep in 1..=PREPARATION_COUNT {
            let mut row = Vec::with_capacity(n_times);
            for k in 0..n_times {
                let mut v = [0.0; 15];
                for (ch, slot) in v.iter_mut().enumerate() {
                    *slot = *cells
                        .get(&(prep, k, ch))
                        .ok_or_else(|| DatasetError::Missing { prep, k, channel: CHANNELS[ch].into() })?;
                }
                row.push(SignalRecord::from_values(&v));
            }
            records.push(row);
        }
        Self::new((1..=PREPARATION_COUNT).collect(), grid, records)
    }

    /// Flat rows in canonical order (prep asc, k asc, channel order).
    pub fn rows(&self) -> Vec<(usize, usize, f64, &'static str, f64)> {
        let mut out = Vec::with_capacity(PREPARATION_COUNT * self.times.len() * 15);
        for (l, row) in self.records.iter().enumerate() {
            for (k, rec) in row.iter().enumerate() {
                for (ch, v) in rec.values().iter().enumerate() {
                    out.push((l + 1, k, self.times[k], CHANNELS[ch], *v));
                }
            }
        }
        out
    }

    pub fn preparations(&self) -> &[usize] {
        &self.preparations
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn record(&self, prep: usize, k: usize) -> &SignalRecord {
        &self.records[prep - 1][k]
    }

    /// The 20 records at time index k, ordered by preparation.
    pub fn at_time(&self, k: usize) -> Vec<SignalRecord> {
        self.records.iter().map(|row| row[k]).collect()
    }

    /// Keeps only the listed time indices (which must include 0).
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DatasetError> {
        let times = indices.iter().map(|&k| self.times[k]).collect();
        let records = self.records.iter().map(|row| indices.iter().map(|&k| row[k]).collect()).collect();
        Self::new(self.preparations.clone(), times, records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(times: &[f64]) -> Vec<(usize, usize, f64, String, f64)> {
        let mut rows = Vec::new();
        for l in 1..=20 {
            for (k, &t) in times.iter().enumerate() {
                for (ch, name) in CHANNELS.iter().enumerate() {
                    rows.push((l, k, t, name.to_string(), 0.01 * (l + k + ch) as f64));
                }
            }
        }
        rows
    }

    #[test]
    fn rows_round_trip() {
        let ds = Dataset::from_rows(flat(&[0.0, 0.5, 1.0])).unwrap();
        assert_eq!(ds.rows().len(), 20 * 3 * 15);
        let again = Dataset::from_rows(ds.rows().into_iter().map(|(l, k, t, c, v)| (l, k, t, c.to_string(), v))).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn missing_cell_is_named() {
        let rows: Vec<_> = flat(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
            .into_iter()
            .filter(|r| !(r.0 == 3 && r.1 == 7 && r.3 == "Jzz"))
            .collect();
        assert_eq!(
            Dataset::from_rows(rows),
            Err(DatasetError::Missing { prep: 3, k: 7, channel: "Jzz".into() })
        );
    }

    #[test]
    fn duplicates_and_bad_times_are_rejected() {
        let mut rows = flat(&[0.0, 1.0]);
        rows.push(rows[0].clone());
        assert!(matches!(Dataset::from_rows(rows), Err(DatasetError::Duplicate { .. })));
        assert!(matches!(Dataset::from_rows(flat(&[0.0, 2.0, 1.0])), Err(DatasetError::Times { index: 2, .. })));
        assert!(matches!(Dataset::from_rows(flat(&[0.5, 1.0])), Err(DatasetError::Times { index: 0, .. })));
    }

    #[test]
    fn out_of_range_value_is_rejected() {
        let mut rows = flat(&[0.0]);
        rows[5].4 = 11.0;
        assert!(matches!(Dataset::from_rows(rows), Err(DatasetError::BadValue { .. })));
    }

    #[test]
    fn observables_match_channel_names() {
        let rho = HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]);
        let r = SignalRecord::of_state(&rho);
        assert_eq!(r.h, [0.0, 0.0, 1.0]);
        assert_eq!(r.c, [0.0, 0.0, 1.0]);
        assert_eq!(r.j[8], 1.0);
        assert!(r.j[..8].iter().all(|&v| v == 0.0));
    }
}
