use crate::error::CliError;
use qpt_core::linalg::{c, CMatrix};
use qpt_core::tomography::Dataset;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

pub const DATASET_HEADER: [&str; 5] = ["prep", "k", "time_s", "channel", "value"];
pub const MATRIX_HEADER: [&str; 4] = ["row", "col", "re", "im"];

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn writer(stage: &'static str, path: &Path) -> Result<csv::Writer<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(stage, dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::io(stage, path, e))
}

pub fn write_rows<I, R>(stage: &'static str, path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(stage, path)?;
    w.write_record(header).map_err(|e| CliError::io(stage, path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(stage, path, e))?;
    }
    w.flush().map_err(|e| CliError::io(stage, path, e))
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), CliError> {
    let rows = dataset.rows().into_iter().map(|(prep, k, t, channel, v)| {
        vec![prep.to_string(), k.to_string(), num(t), channel.to_string(), num(v)]
    });
    write_rows("simulate", path, &DATASET_HEADER, rows)
}

#[derive(Debug, Deserialize)]
struct DatasetRow {
    prep: usize,
    k: usize,
    time_s: f64,
    channel: String,
    value: f64,
}

fn reader(stage: &'static str, path: &Path) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(stage, path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn check_header(stage: &'static str, path: &Path, r: &mut csv::Reader<File>, want: &[&str]) -> Result<(), CliError> {
    let got = r.headers().map_err(|e| CliError::validation(stage, format!("{}: {e}", path.display())))?;
    if got.iter().ne(want.iter().copied()) {
        return Err(CliError::validation(
            stage,
            format!("{}: header is `{}`, expected `{}`", path.display(), got.iter().collect::<Vec<_>>().join(","), want.join(",")),
        ));
    }
    Ok(())
}

fn row_error(stage: &'static str, path: &Path, err: csv::Error) -> CliError {
    let at = match err.position() {
        Some(p) => format!("line {}", p.line()),
        None => "unknown line".to_string(),
    };
    let column = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.field().map(|f| format!(", column {}", f + 1)).unwrap_or_default(),
        _ => String::new(),
    };
    CliError::validation(stage, format!("{}: {at}{column}: {err}", path.display()))
}

/// Parses and validates a dataset file.
pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let mut r = reader("ingest", path)?;
    check_header("ingest", path, &mut r, &DATASET_HEADER)?;
    let mut rows = Vec::new();
    for rec in r.deserialize::<DatasetRow>() {
        let row = rec.map_err(|e| row_error("ingest", path, e))?;
        rows.push((row.prep, row.k, row.time_s, row.channel, row.value));
    }
    Dataset::from_rows(rows).map_err(|e| CliError::validation("ingest", format!("{}: {e}", path.display())))
}

pub fn write_matrix(stage: &'static str, path: &Path, m: &CMatrix) -> Result<(), CliError> {
    let rows = (0..m.nrows()).flat_map(|i| {
        (0..m.ncols()).map(move |j| vec![i.to_string(), j.to_string(), num(m[(i, j)].re), num(m[(i, j)].im)])
    });
    write_rows(stage, path, &MATRIX_HEADER, rows)
}

#[derive(Debug, Deserialize)]
struct MatrixRow {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

/// Reads a square complex matrix; every entry must appear exactly once.
pub fn read_matrix(stage: &'static str, path: &Path) -> Result<CMatrix, CliError> {
    let mut r = reader(stage, path)?;
    check_header(stage, path, &mut r, &MATRIX_HEADER)?;
    let mut cells = BTreeMap::new();
    for rec in r.deserialize::<MatrixRow>() {
        let row = rec.map_err(|e| row_error(stage, path, e))?;
        if cells.insert((row.row, row.col), c(row.re, row.im)).is_some() {
            return Err(CliError::validation(stage, format!("{}: duplicate entry ({}, {})", path.display(), row.row, row.col)));
        }
    }
    let n = cells.keys().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    if cells.len() != n * n {
        return Err(CliError::validation(stage, format!("{}: {} entries for a {n}x{n} matrix", path.display(), cells.len())));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| cells[&(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qpt_core::nmr::{generate_dataset, log_time_grid, NoiseSpec, RelaxationParams, SpinSystemParams};

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = generate_dataset(
            &SpinSystemParams::default(),
            &RelaxationParams::default(),
            &NoiseSpec::gaussian(1e-3, 5),
            &log_time_grid(4, 0.01, 60.0),
        )
        .unwrap();
        write_dataset(&path, &ds).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn malformed_cell_names_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "prep,k,time_s,channel,value\n1,0,0,Hx,0.5\n1,0,0,Hy,abc\n").unwrap();
        let msg = read_dataset(&path).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("column 5"), "{msg}");
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "prep,k,t,channel,value\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(CliError::Validation { .. })));
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = CMatrix::from_fn(3, 3, |i, j| c(i as f64 / 7.0, -(j as f64) * 1e-17));
        write_matrix("reconstruct", &path, &m).unwrap();
        assert_eq!(read_matrix("analyze", &path).unwrap(), m);
        std::fs::write(&path, "row,col,re,im\n0,0,1,0\n0,1,1,0\n").unwrap();
        assert!(read_matrix("analyze", &path).is_err());
    }
}
