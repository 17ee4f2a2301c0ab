//! Acceptance criteria 1 to 14, one PASS/FAIL line each.
//!
//! Criteria 1 to 13 run in process. Criterion 14 runs the in-process probe
//! and additionally runs the `selftest` binary three times (1, 8 and 8
//! workers) and compares the CSV bytes.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use thermolab_cli::acceptance::{run_criterion, Check, CriterionOutcome, Suite, CRITERIA};

fn selftest_csv(workers: usize, dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_thermolab"))
        .args(["selftest", "--workers", &workers.to_string(), "--out"])
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("selftest with {workers} workers exited with {}", out.status));
    }
    std::fs::read(dir.join("selftest.csv")).map_err(|e| e.to_string())
}

fn binary_determinism() -> Check {
    let tmp = tempfile::tempdir().expect("tempdir");
    let runs: Vec<_> = [(1, "a"), (8, "b"), (8, "c")]
        .iter()
        .map(|(w, d)| selftest_csv(*w, &tmp.path().join(d)))
        .collect();
    let ok = match &runs[..] {
        [Ok(a), Ok(b), Ok(c)] => a == b && b == c,
        _ => {
            for r in runs.iter().filter_map(|r| r.as_ref().err()) {
                println!("    {r}");
            }
            false
        }
    };
    Check::holds("selftest.csv identical for binary runs with 1, 8, 8 workers", ok)
}

fn main() -> ExitCode {
    let suite = Suite::new();
    let mut failed = 0;
    println!("\nrunning {} acceptance criteria", CRITERIA.len());
    for (id, _) in CRITERIA {
        let start = Instant::now();
        let mut outcome: CriterionOutcome = run_criterion(&suite, id);
        if id == 14 {
            outcome.checks.push(binary_determinism());
        }
        println!("{}  [{:.1}s]", outcome.summary_line(), start.elapsed().as_secs_f64());
        for c in &outcome.checks {
            println!("      {:<58} {:>24.16e}  {}", c.quantity, c.value, c.bound);
        }
        if !outcome.passed() {
            failed += 1;
        }
    }
    println!("\nacceptance: {} passed, {failed} failed\n", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
