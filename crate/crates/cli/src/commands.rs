use crate::config::{DataSource, RunConfig};
use crate::error::CliError;
use crate::io::{num, read_dataset, read_matrix, write_dataset, write_matrix, write_rows};
use crate::plot::{self, Curve};
use qpt_core::analysis::{map_property_series, relaxation_table, trace_distance_series, FitResult};
use qpt_core::linalg::{c, CMatrix, HermitianMatrix};
use qpt_core::nmr::{generate_dataset, rescaled_equilibrium};
use qpt_core::qmap::{
    build_mub_preparations, build_operator_basis, ChiMatrix, ChoiMatrix, DensityEstimate, SuperoperatorMatrix,
    OPERATOR_BASIS_ID,
};
use qpt_core::tomography::{
    run_full_reconstruction, Dataset, ProcessEstimate, ReconstructionConfig, CHANNELS, PREPARATION_COUNT,
};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const DATASET_FILE: &str = "dataset.csv";
pub const RECONSTRUCTION_DIR: &str = "reconstruction";
pub const ANALYSIS_DIR: &str = "analysis";
pub const REPRESENTATIONS: [&str; 3] = ["chi", "liouville", "choi"];

fn map_file(dir: &Path, representation: &str, k: usize) -> PathBuf {
    dir.join(representation).join(format!("k{k:02}.csv"))
}

fn fresh_dir(stage: &'static str, dir: &Path) -> Result<(), CliError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| CliError::io(stage, dir, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(stage, dir, e))
}

fn simulated(cfg: &RunConfig) -> Result<Dataset, CliError> {
    match &cfg.source {
        DataSource::Simulator(sim) => {
            Ok(generate_dataset(&cfg.spin.params(), &sim.relaxation(), &sim.noise(), &sim.times()?)?)
        }
        DataSource::File(path) => Err(CliError::validation(
            "simulate",
            format!("the configured data source is the file {}; remove `input` to simulate", path.display()),
        )),
    }
}

/// Writes `<out>/dataset.csv` from the simulator settings.
pub fn simulate(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dataset = simulated(cfg)?;
    let path = cfg.out.join(DATASET_FILE);
    write_dataset(&path, &dataset)?;
    Ok(path)
}

/// The configured dataset: the input file, or a fresh simulation.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    match &cfg.source {
        DataSource::File(path) => read_dataset(path),
        DataSource::Simulator(_) => simulated(cfg),
    }
}

/// Reconstructs every time step and writes the χ, Liouville and Choi
/// matrices. Failed steps are reported after the others are written.
pub fn reconstruct(cfg: &RunConfig, dataset: &Dataset) -> Result<(), CliError> {
    let basis = build_operator_basis(&build_mub_preparations())
        .map_err(|e| CliError::validation("reconstruct", e.to_string()))?;
    let config = ReconstructionConfig { solver: cfg.solver_config(), jobs: cfg.jobs };
    let rec = run_full_reconstruction(dataset, &basis, &config).map_err(|e| CliError::from_tomography("reconstruct", e))?;

    let dir = cfg.out.join(RECONSTRUCTION_DIR);
    fresh_dir("reconstruct", &dir)?;
    let stage = "reconstruct";
    let times = rec.times.iter().enumerate().map(|(k, &t)| {
        let iterations = rec.estimates[k].as_ref().map(|e| e.iterations.to_string()).unwrap_or_default();
        vec![k.to_string(), num(t), iterations]
    });
    write_rows(stage, &dir.join("times.csv"), &["k", "time_s", "iterations"], times)?;
    let states = rec.initial.states.iter().enumerate().flat_map(|(l, s)| {
        let m = s.matrix().matrix().clone();
        (0..16).map(move |idx| {
            let (i, j) = (idx / 4, idx % 4);
            vec![(l + 1).to_string(), i.to_string(), j.to_string(), num(m[(i, j)].re), num(m[(i, j)].im)]
        })
    });
    write_rows(stage, &dir.join("states.csv"), &["prep", "row", "col", "re", "im"], states)?;

    let mut slack_rows = Vec::new();
    for e in rec.estimates.iter().flatten() {
        let k = e.time_index;
        write_matrix(stage, &map_file(&dir, "chi", k), e.chi.matrix.matrix())?;
        write_matrix(stage, &map_file(&dir, "liouville", k), &e.superop.matrix)?;
        write_matrix(stage, &map_file(&dir, "choi", k), e.choi.matrix().matrix())?;
        for (l, slacks) in e.residuals.iter().enumerate() {
            for (ch, s) in slacks.iter().enumerate() {
                slack_rows.push(vec![k.to_string(), (l + 1).to_string(), CHANNELS[ch].to_string(), num(*s)]);
            }
        }
    }
    write_rows(stage, &dir.join("residuals.csv"), &["k", "prep", "channel", "slack"], slack_rows)?;

    let failures = rec.failures();
    if !failures.is_empty() {
        let list: Vec<String> = failures.iter().map(|(k, e)| format!("k={k}: {e}")).collect();
        return Err(CliError::Solver { stage, message: list.join("; ") });
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TimeRow {
    k: usize,
    time_s: f64,
    iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct StateRow {
    prep: usize,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

#[derive(Debug, Deserialize)]
struct SlackRow {
    k: usize,
    prep: usize,
    channel: String,
    slack: f64,
}

fn rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    if !path.exists() {
        return Err(CliError::Io {
            stage: "analyze",
            message: format!("missing output of stage `reconstruct`: {}", path.display()),
        });
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io("analyze", path, e))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::validation("analyze", format!("{}: {e}", path.display())))
}

/// Reconstruction outputs read back from disk.
pub struct Loaded {
    pub times: Vec<f64>,
    pub initial: Vec<DensityEstimate>,
    pub estimates: Vec<ProcessEstimate>,
}

pub fn load_reconstruction(out: &Path) -> Result<Loaded, CliError> {
    let dir = out.join(RECONSTRUCTION_DIR);
    let bad = |msg: String| CliError::validation("analyze", msg);
    let time_rows: Vec<TimeRow> = rows(&dir.join("times.csv"))?;
    if time_rows.iter().enumerate().any(|(i, r)| r.k != i) {
        return Err(bad("times.csv must list k = 0, 1, ... in order".into()));
    }
    let times = time_rows.iter().map(|r| r.time_s).collect();

    let mut entries = vec![CMatrix::zeros(4, 4); PREPARATION_COUNT];
    let mut seen = vec![0usize; PREPARATION_COUNT];
    for r in rows::<StateRow>(&dir.join("states.csv"))? {
        if r.prep == 0 || r.prep > PREPARATION_COUNT || r.row > 3 || r.col > 3 {
            return Err(bad(format!("states.csv: entry ({}, {}, {}) out of range", r.prep, r.row, r.col)));
        }
        entries[r.prep - 1][(r.row, r.col)] = c(r.re, r.im);
        seen[r.prep - 1] += 1;
    }
    if seen.iter().any(|&n| n != 16) {
        return Err(bad("states.csv must hold 16 entries for each of the 20 preparations".into()));
    }
    let initial = entries
        .into_iter()
        .enumerate()
        .map(|(l, m)| {
            let h = HermitianMatrix::new(m).map_err(|e| bad(format!("state {}: {e}", l + 1)))?;
            DensityEstimate::new(h).map_err(|e| bad(format!("state {}: {e}", l + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut slacks: BTreeMap<usize, Vec<[f64; 15]>> = BTreeMap::new();
    for r in rows::<SlackRow>(&dir.join("residuals.csv"))? {
        let ch = CHANNELS.iter().position(|name| *name == r.channel).ok_or_else(|| bad(format!("unknown channel {}", r.channel)))?;
        if r.prep == 0 || r.prep > PREPARATION_COUNT {
            return Err(bad(format!("residuals.csv: preparation {} out of range", r.prep)));
        }
        slacks.entry(r.k).or_insert_with(|| vec![[f64::NAN; 15]; PREPARATION_COUNT])[r.prep - 1][ch] = r.slack;
    }

    let mut estimates = Vec::with_capacity(time_rows.len());
    for row in &time_rows {
        let k = row.k;
        let read = |rep: &str| -> Result<_, CliError> {
            let path = map_file(&dir, rep, k);
            if !path.exists() {
                return Err(CliError::Io {
                    stage: "analyze",
                    message: format!("missing output of stage `reconstruct`: {}", path.display()),
                });
            }
            read_matrix("analyze", &path)
        };
        let herm = |m| HermitianMatrix::new(m).map_err(|e| bad(format!("k={k}: {e}")));
        let chi = ChiMatrix::new(herm(read("chi")?)?, OPERATOR_BASIS_ID).map_err(|e| bad(format!("k={k}: {e}")))?;
        let superop = SuperoperatorMatrix::new(read("liouville")?).map_err(|e| bad(format!("k={k}: {e}")))?;
        let choi = ChoiMatrix::new(herm(read("choi")?)?).map_err(|e| bad(format!("k={k}: {e}")))?;
        let residuals = slacks.remove(&k).ok_or_else(|| bad(format!("residuals.csv has no rows for k={k}")))?;
        estimates.push(ProcessEstimate { chi, superop, choi, residuals, time_index: k, iterations: row.iterations.unwrap_or(0) });
    }
    Ok(Loaded { times, initial, estimates })
}

fn warn_plot(path: &Path, result: Result<(), String>) {
    if let Err(e) = result {
        eprintln!("warning: plot {} not written: {e}", path.display());
    }
}

/// Fit table, decay series, trace distances and map deviations as CSV and SVG.
pub fn analyze(cfg: &RunConfig) -> Result<(), CliError> {
    let loaded = load_reconstruction(&cfg.out)?;
    let eq = rescaled_equilibrium(&cfg.spin.params());
    let estimates: Vec<&ProcessEstimate> = loaded.estimates.iter().collect();
    let table = relaxation_table(&loaded.times, &estimates, &loaded.initial, &eq)?;
    let (tp, un) = map_property_series(&loaded.times, &estimates)?;
    let distances = trace_distance_series(&loaded.times, &estimates, &loaded.initial, &eq)?;

    let dir = cfg.out.join(ANALYSIS_DIR);
    fresh_dir("analyze", &dir)?;
    let stage = "analyze";

    let header = ["label", "m0", "t_star", "c", "se_m0", "se_t_star", "se_c", "rmse", "converged"];
    let fits: Vec<Option<FitResult>> = table.iter().map(|r| r.fit.as_ref().ok().cloned()).collect();
    let fit_rows: Vec<Vec<String>> = table
        .iter()
        .zip(&fits)
        .map(|(row, fit)| {
            let mut cells = vec![row.label.to_string()];
            match fit {
                Some(f) => {
                    let (a, b, c) = f.std_errors;
                    cells.extend([f.m0, f.t_star, f.c, a, b, c, f.rmse].map(num));
                    cells.push(f.converged.to_string());
                }
                None => {
                    cells.extend((0..7).map(|_| num(f64::NAN)));
                    cells.push("false".into());
                }
            }
            cells
        })
        .collect();
    write_rows(stage, &dir.join("fit_table.csv"), &header, fit_rows.clone())?;

    let series_rows = table.iter().flat_map(|row| {
        row.series.times.iter().zip(&row.series.values).map(|(t, v)| vec![row.label.to_string(), num(*t), num(*v)])
    });
    write_rows(stage, &dir.join("decay_series.csv"), &["label", "time_s", "value"], series_rows)?;

    let distance_rows = distances.iter().enumerate().flat_map(|(l, s)| {
        s.times.iter().zip(&s.values).map(move |(t, v)| vec![(l + 1).to_string(), num(*t), num(*v)])
    });
    write_rows(stage, &dir.join("trace_distance.csv"), &["prep", "time_s", "value"], distance_rows)?;

    let deviation_rows =
        tp.times.iter().zip(tp.values.iter().zip(&un.values)).map(|(t, (a, b))| vec![num(*t), num(*a), num(*b)]);
    write_rows(stage, &dir.join("map_deviation.csv"), &["time_s", "tp_deviation", "unitality_deviation"], deviation_rows)?;

    let pretty: Vec<Vec<String>> = table
        .iter()
        .zip(&fits)
        .map(|(row, fit)| match fit {
            Some(f) => vec![
                row.label.to_string(),
                format!("{:.4}", f.t_star),
                format!("{:.2e}", f.std_errors.1),
                format!("{:.4}", f.m0),
                format!("{:.4}", f.c),
                f.converged.to_string(),
            ],
            None => vec![row.label.to_string(), "-".into(), "-".into(), "-".into(), "-".into(), "false".into()],
        })
        .collect();
    let path = dir.join("fit_table.svg");
    warn_plot(&path, plot::table(&path, "Relaxation times", &["row", "T* (s)", "se T*", "M0", "c", "converged"], &pretty));

    let series: Vec<_> = table.iter().map(|r| r.series.clone()).collect();
    let path = dir.join("decay_series.svg");
    warn_plot(&path, plot::decay_panels(&path, &series, &fits));

    let distance_points: Vec<Vec<(f64, f64)>> =
        distances.iter().map(|s| s.times.iter().copied().zip(s.values.iter().copied()).collect()).collect();
    let curves: Vec<Curve> = distance_points
        .iter()
        .enumerate()
        .map(|(l, p)| Curve { label: format!("prep {}", l + 1), points: p })
        .collect();
    let path = dir.join("trace_distance.svg");
    warn_plot(&path, plot::line_chart(&path, "Trace distance to the rescaled equilibrium", "distance", &curves, false));

    let tp_points: Vec<(f64, f64)> = tp.times.iter().copied().zip(tp.values.iter().copied()).collect();
    let un_points: Vec<(f64, f64)> = un.times.iter().copied().zip(un.values.iter().copied()).collect();
    let curves = [
        Curve { label: "trace preservation".into(), points: &tp_points },
        Curve { label: "unitality".into(), points: &un_points },
    ];
    let path = dir.join("map_deviation.svg");
    warn_plot(&path, plot::line_chart(&path, "Map deviations", "Frobenius norm", &curves, true));
    Ok(())
}

/// simulate (when the source is the simulator), reconstruct, analyze.
pub fn full_run(cfg: &RunConfig) -> Result<(), CliError> {
    let dataset = match &cfg.source {
        DataSource::Simulator(_) => read_dataset(&simulate(cfg)?)?,
        DataSource::File(path) => read_dataset(path)?,
    };
    reconstruct(cfg, &dataset)?;
    analyze(cfg)
}
