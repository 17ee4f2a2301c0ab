use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_thermolab"));
    c.env_remove("THERMOLAB_WORKERS");
    c
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn negative_rel_tol_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[integrator]\nrel_tol = -1e-9\n");
    let out = run(&["orbit"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrator.rel_tol"));
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[scan]\ngird = [4, 4, 4]\n");
    let out = run(&["green-scan"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gird"));
}

#[test]
fn step_budget_exhaustion_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[integrator]\nmax_steps = 3\nmax_step = 0.01\n");
    let out = run(&["orbit"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("orbit"));
}

#[test]
fn missing_config_is_rejected() {
    let out = bin().args(["hopf", "--out", "/nonexistent"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn curvature_scan_on_s1_reports_vanishing_thermostat_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["curvature-scan"], &bundled("s1.toml"), dir.path());
    assert!(out.status.success());
    let s = json(&dir.path().join("curvature-scan.json"));
    assert!(s["results"]["kappa_p"]["max_abs"].as_f64().unwrap() < 1e-12);
    assert_eq!(s["version"], thermolab::VERSION);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("curvature_scan.csv")).unwrap();
    assert!(csv.starts_with("x,y,theta,kappa_p,big_k,kappa_tilde\n"));
    assert_eq!(csv.lines().count(), 1 + 8 * 8 * 8);
}

#[test]
fn orbit_and_cocycle_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["orbit"], &bundled("s2.toml"), dir.path()).status.success());
    assert!(run(&["cocycle"], &bundled("s2.toml"), dir.path()).status.success());
    let orbit = std::fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    assert_eq!(orbit.lines().next().unwrap(), "t,x,y,theta,lambda,V_lambda,kappa_p,big_k,kappa_tilde");
    assert_eq!(orbit.lines().count(), 1 + 81);
    let cocycle = std::fs::read_to_string(dir.path().join("cocycle.csv")).unwrap();
    assert_eq!(cocycle.lines().next().unwrap(), "t,x_c,y_c,z,m,det_Gamma");
    for line in cocycle.lines().skip(1) {
        let det: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert!((det - 1.0).abs() < 1e-7);
    }
}

#[test]
fn summary_round_trip_reproduces_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["conjugate-scan", "--seed", "77"], &bundled("s3.toml"), &a).status.success());
    let summary = a.join("conjugate-scan.json");
    assert_eq!(json(&summary)["config"]["scan"]["seed"], 77);
    assert!(run(&["conjugate-scan"], &summary, &b).status.success());
    let read = |d: &Path| std::fs::read(d.join("conjugate_scan.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(json(&summary)["config_hash"], json(&b.join("conjugate-scan.json"))["config_hash"]);
}

#[test]
fn tables_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &(std::fs::read_to_string(bundled("s3.toml")).unwrap().replace("samples = 10", "samples = 6")),
    );
    let mut tables = Vec::new();
    for (w, sub) in [("1", "w1"), ("8", "w8")] {
        let out = dir.path().join(sub);
        let st = bin()
            .args(["lyapunov", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("THERMOLAB_WORKERS", w)
            .output()
            .unwrap();
        assert!(st.status.success());
        assert_eq!(json(&out.join("lyapunov.json"))["workers"], w.parse::<u64>().unwrap());
        tables.push(std::fs::read(out.join("lyapunov.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn seed_changes_random_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["conjugate-scan", "--seed", "1"], &bundled("s2.toml"), &a).status.success());
    assert!(run(&["conjugate-scan", "--seed", "2"], &bundled("s2.toml"), &b).status.success());
    let read = |d: &Path| std::fs::read(d.join("conjugate_scan.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert_eq!(json(&a.join("conjugate-scan.json"))["results"]["detections"], 0);
}

#[test]
fn hopf_on_s2() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["hopf"], &bundled("s2.toml"), dir.path()).status.success());
    let r = &json(&dir.path().join("hopf.json"))["results"];
    let target = -1.5 * std::f64::consts::TAU.powi(3);
    assert!((r["secondary"].as_f64().unwrap() / target - 1.0).abs() < 1e-9);
    assert!(r["margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn green_scan_and_domination_on_s2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &std::fs::read_to_string(bundled("s2.toml"))
            .unwrap()
            .replace("grid = [16, 16, 16]", "grid = [3, 3, 3]")
            .replace("samples = 10", "samples = 3"),
    );
    assert!(run(&["green-scan"], &cfg, dir.path()).status.success());
    assert!(run(&["domination"], &cfg, dir.path()).status.success());
    let g = &json(&dir.path().join("green-scan.json"))["results"];
    assert!((g["min_gap"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(g["non_converged"], 0);
    let d = &json(&dir.path().join("domination.json"))["results"];
    assert!((d["fitted_slope"].as_f64().unwrap() + 2.0).abs() < 0.1);
}

#[test]
fn selftest_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["selftest", "--only", "1,13", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let bad = bin().args(["selftest", "--only", "99", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
