use crate::error::CliError;
use qpt_core::nmr::{log_time_grid, NoiseSpec, RelaxationParams, SpinSystemParams};
use qpt_core::solver::{SolverConfig, SolverMethod};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinSection {
    pub omega_h: f64,
    pub omega_c: f64,
    pub j_coupling: f64,
    pub temperature: f64,
    pub epsilon_scale: f64,
}

impl Default for SpinSection {
    fn default() -> Self {
        let p = SpinSystemParams::default();
        Self {
            omega_h: p.omega_h,
            omega_c: p.omega_c,
            j_coupling: p.j_coupling,
            temperature: p.temperature,
            epsilon_scale: p.epsilon_scale,
        }
    }
}

impl SpinSection {
    pub fn params(&self) -> SpinSystemParams {
        SpinSystemParams {
            omega_h: self.omega_h,
            omega_c: self.omega_c,
            j_coupling: self.j_coupling,
            temperature: self.temperature,
            epsilon_scale: self.epsilon_scale,
        }
    }
}

/// Relaxation times, noise and time grid for synthetic data.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorSection {
    pub t1_h: f64,
    pub t2_h: f64,
    pub t1_c: f64,
    pub t2_c: f64,
    pub t1_j: f64,
    pub t2_j: f64,
    /// Absolute Gaussian noise on normalized signals; 0 disables noise.
    pub noise_sigma: f64,
    pub seed: u64,
    pub time_count: usize,
    pub time_first: f64,
    pub time_last: f64,
}

impl Default for SimulatorSection {
    fn default() -> Self {
        let r = RelaxationParams::default();
        Self {
            t1_h: r.t1_h,
            t2_h: r.t2_h,
            t1_c: r.t1_c,
            t2_c: r.t2_c,
            t1_j: r.t1_j,
            t2_j: r.t2_j,
            noise_sigma: 1e-3,
            seed: 0,
            time_count: 51,
            time_first: 0.01,
            time_last: 60.0,
        }
    }
}

impl SimulatorSection {
    pub fn relaxation(&self) -> RelaxationParams {
        RelaxationParams {
            t1_h: self.t1_h,
            t2_h: self.t2_h,
            t1_c: self.t1_c,
            t2_c: self.t2_c,
            t1_j: self.t1_j,
            t2_j: self.t2_j,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        if self.noise_sigma == 0.0 {
            NoiseSpec::none()
        } else {
            NoiseSpec::gaussian(self.noise_sigma, self.seed)
        }
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        if self.time_count < 2 || !(self.time_first > 0.0 && self.time_last > self.time_first) {
            return Err(CliError::validation(
                "config",
                format!(
                    "time grid needs time_count >= 2 and 0 < time_first < time_last (got {}, {}, {})",
                    self.time_count, self.time_first, self.time_last
                ),
            ));
        }
        Ok(log_time_grid(self.time_count, self.time_first, self.time_last))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    InteriorPoint,
    Splitting,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: MethodName,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self { tolerance: s.tolerance, max_iterations: s.max_iterations, method: MethodName::InteriorPoint }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    spin: SpinSection,
    simulator: Option<SimulatorSection>,
    solver: SolverSection,
}

#[derive(Debug, Clone)]
pub enum DataSource {
    File(PathBuf),
    Simulator(SimulatorSection),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: DataSource,
    pub spin: SpinSection,
    pub solver: SolverSection,
    pub out: PathBuf,
    /// 0 lets the worker pool pick.
    pub jobs: usize,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::validation("config", e.to_string()))?;
        let source = match (raw.input, raw.simulator) {
            (Some(_), Some(_)) => {
                return Err(CliError::validation("config", "set either `input` or a [simulator] table, not both"))
            }
            (Some(path), None) => DataSource::File(if path.is_relative() { base.join(path) } else { path }),
            (None, sim) => DataSource::Simulator(sim.unwrap_or_default()),
        };
        let mut cfg = Self {
            source,
            spin: raw.spin,
            solver: raw.solver,
            out: raw.out.map(|p| if p.is_relative() { base.join(p) } else { p }).unwrap_or_else(|| PathBuf::from("out")),
            jobs: raw.jobs.unwrap_or(0),
        };
        cfg.apply(overrides)?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io("config", p, e))?;
                Self::parse(&text, p.parent().unwrap_or(Path::new(".")), overrides)
            }
            None => Self::parse("", Path::new("."), overrides),
        }
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(jobs) = o.jobs {
            self.jobs = jobs;
        }
        if let Some(seed) = o.seed {
            if let DataSource::Simulator(sim) = &mut self.source {
                sim.seed = seed;
            }
        }
        if let Some(tol) = o.tolerance {
            self.solver.tolerance = tol;
        }
        if !(self.solver.tolerance > 0.0 && self.solver.tolerance.is_finite()) {
            return Err(CliError::validation("config", format!("tolerance must be positive, got {}", self.solver.tolerance)));
        }
        if self.solver.max_iterations == 0 {
            return Err(CliError::validation("config", "max_iterations must be positive"));
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.solver.tolerance,
            max_iterations: self.solver.max_iterations,
            method: match self.solver.method {
                MethodName::InteriorPoint => SolverMethod::InteriorPoint,
                MethodName::Splitting => SolverMethod::Splitting,
            },
            ..SolverConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_simulator_defaults() {
        let cfg = RunConfig::parse("", Path::new("."), &Overrides::default()).unwrap();
        match cfg.source {
            DataSource::Simulator(sim) => {
                assert_eq!(sim.time_count, 51);
                assert_eq!(sim.noise(), NoiseSpec::gaussian(1e-3, 0));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.out, PathBuf::from("out"));
    }

    #[test]
    fn both_sources_rejected() {
        let err = RunConfig::parse("input = \"a.csv\"\n[simulator]\nseed = 3\n", Path::new("."), &Overrides::default());
        assert!(matches!(err, Err(CliError::Validation { .. })));
    }

    #[test]
    fn flags_override_file() {
        let text = "out = \"o\"\njobs = 2\n[simulator]\nseed = 3\nnoise_sigma = 0.0\n[solver]\ntolerance = 1e-6\n";
        let o = Overrides { seed: Some(9), tolerance: Some(1e-8), ..Default::default() };
        let cfg = RunConfig::parse(text, Path::new("/base"), &o).unwrap();
        assert_eq!(cfg.out, PathBuf::from("/base/o"));
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.solver_config().tolerance, 1e-8);
        match cfg.source {
            DataSource::Simulator(sim) => {
                assert_eq!(sim.seed, 9);
                assert_eq!(sim.noise(), NoiseSpec::none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("bogus = 1\n", Path::new("."), &Overrides::default()).is_err());
        assert!(RunConfig::parse("[solver]\ntolerance = -1.0\n", Path::new("."), &Overrides::default()).is_err());
        assert!(RunConfig::parse("[solver]\nmethod = \"splitting\"\n", Path::new("."), &Overrides::default()).is_ok());
    }
}
