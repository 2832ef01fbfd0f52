use clap::{Parser, Subcommand};
use qpt_cli::{commands, CliError, Overrides, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qpt", version, about = "Process tomography of two-spin NMR relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for per-time-step solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Noise seed for simulated data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write a synthetic dataset.
    Simulate,
    /// Reconstruct the map at every time step.
    Reconstruct,
    /// Fit and tabulate a finished reconstruction.
    Analyze,
    /// Simulate, reconstruct and analyze.
    FullRun,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Reconstruct => "reconstruct",
            Self::Analyze => "analyze",
            Self::FullRun => "full-run",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides { out: cli.out.clone(), jobs: cli.jobs, seed: cli.seed, tolerance: cli.tolerance };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg).map(|_| ()),
        Command::Reconstruct => commands::reconstruct(&cfg, &commands::load_dataset(&cfg)?),
        Command::Analyze => commands::analyze(&cfg),
        Command::FullRun => commands::full_run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {
            println!("{}", serde_json::json!({ "status": "ok", "command": cli.command.name() }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.summary());
            ExitCode::from(e.exit_code())
        }
    }
}
