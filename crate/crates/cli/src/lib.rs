//! Command-line driver for thermolab experiments: TOML configuration,
//! subcommands that write CSV tables and JSON summaries, and the acceptance
//! suite run by `selftest`.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

use serde_json::json;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
use output::Report;

/// Experiment subcommands other than `selftest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Orbit,
    Cocycle,
    CurvatureScan,
    ConjugateScan,
    GreenScan,
    Lyapunov,
    Domination,
    Hopf,
}

impl Experiment {
    pub fn run(self, cfg: &ExperimentConfig) -> CliResult<Report> {
        match self {
            Experiment::Orbit => commands::orbit(cfg),
            Experiment::Cocycle => commands::cocycle(cfg),
            Experiment::CurvatureScan => commands::curvature_scan(cfg),
            Experiment::ConjugateScan => commands::conjugate_scan_cmd(cfg),
            Experiment::GreenScan => commands::green_scan(cfg),
            Experiment::Lyapunov => commands::lyapunov(cfg),
            Experiment::Domination => commands::domination(cfg),
            Experiment::Hopf => commands::hopf(cfg),
        }
    }
}

/// Runs one experiment and writes its outputs into `out`.
pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig, out: &Path, workers: usize) -> CliResult<Report> {
    let report = exp.run(cfg)?;
    output::write_report(out, &report, Some(cfg), workers)?;
    Ok(report)
}

/// Runs the selected acceptance criteria (all when `only` is empty), prints
/// one line per criterion and writes `selftest.csv` and `selftest.json`.
pub fn run_selftest(only: &[usize], out: &Path, workers: usize) -> CliResult<Vec<acceptance::CriterionOutcome>> {
    let suite = acceptance::Suite::new();
    let ids: Vec<usize> = acceptance::CRITERIA
        .iter()
        .map(|c| c.0)
        .filter(|id| only.is_empty() || only.contains(id))
        .collect();
    if ids.is_empty() {
        return Err(CliError::Validation(format!("--only: no criterion among {only:?}")));
    }
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run_criterion(&suite, id);
        println!("{}", o.summary_line());
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    let report = Report {
        command: "selftest",
        tables: vec![acceptance::outcomes_table(&outcomes)],
        results: json!({
            "criteria": outcomes.iter().map(|o| json!({ "id": o.id, "title": o.title, "passed": o.passed() })).collect::<Vec<_>>(),
            "failed": failed,
            "bundled_config_hashes": suite.configs.iter().map(|(n, c)| json!({ "name": n, "hash": c.hash() })).collect::<Vec<_>>(),
        }),
    };
    output::write_report(out, &report, None, workers)?;
    if failed > 0 {
        return Err(CliError::SelftestFailed {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(outcomes)
}
