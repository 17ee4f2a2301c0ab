use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use thermolab_cli::{run_experiment, run_selftest, CliError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "thermolab", version, about = "Numerical experiments for thermostat flows on the 2-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML, or a JSON summary from a previous run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV tables and the JSON summary.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "THERMOLAB_WORKERS")]
    workers: Option<usize>,

    /// Overrides `scan.seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one orbit with its curvature coefficients.
    Orbit,
    /// Transport a covector along one orbit.
    Cocycle,
    /// Curvature extrema over a grid.
    CurvatureScan,
    /// First conjugate times from seeded initial conditions.
    ConjugateScan,
    /// Green slopes and transversality over a grid.
    GreenScan,
    /// Exponents along the Green lines.
    Lyapunov,
    /// Domination rate fit.
    Domination,
    /// Liouville integrals of the curvature inequality.
    Hopf,
    /// Run the acceptance suite on the bundled configs.
    Selftest {
        /// Comma-separated criterion numbers to run.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn experiment(c: &Command) -> Option<Experiment> {
    Some(match c {
        Command::Orbit => Experiment::Orbit,
        Command::Cocycle => Experiment::Cocycle,
        Command::CurvatureScan => Experiment::CurvatureScan,
        Command::ConjugateScan => Experiment::ConjugateScan,
        Command::GreenScan => Experiment::GreenScan,
        Command::Lyapunov => Experiment::Lyapunov,
        Command::Domination => Experiment::Domination,
        Command::Hopf => Experiment::Hopf,
        Command::Selftest { .. } => return None,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let workers = match cli.workers {
        Some(0) => return Err(CliError::Validation("--workers must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().context("building worker pool")?;
    match experiment(&cli.command) {
        Some(exp) => {
            let path = cli
                .config
                .ok_or_else(|| CliError::Validation("--config is required for this subcommand".into()))?;
            let mut cfg = ExperimentConfig::load(&path)?;
            if let Some(seed) = cli.seed {
                cfg.scan.seed = seed;
            }
            let report = pool.install(|| run_experiment(exp, &cfg, &cli.out, workers))?;
            println!("{}", serde_json::to_string_pretty(&report.results)?);
        }
        None => {
            let Command::Selftest { only } = cli.command else { unreachable!() };
            pool.install(|| run_selftest(&only, &cli.out, workers))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(2, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
