//! Experiment subcommands. Each returns a [`Report`] whose tables depend only
//! on the config, never on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use thermolab::analysis::{
    conjugate_scan, domination_estimate, green_slope, lyapunov_on_orbit, transversality_scan, uniform_grid, Side,
};
use thermolab::cocycle::{cocycle_matrix, propagate_sigma, CocycleFlavor, SigmaCovector};
use thermolab::flow::integrate_orbit;
use thermolab::geometry::PhasePoint;
use thermolab::global::hopf_check;
use thermolab::model::GaugeSpec;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Cell, Report, Table};

const TAU: f64 = std::f64::consts::TAU;

/// `n` points uniform on `[0, 2π)³` from a ChaCha8 stream.
pub fn seeded_points(seed: u64, n: usize) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| PhasePoint::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)))
        .collect()
}

fn sample_times(t_min: f64, t_max: f64, dt: f64) -> Vec<f64> {
    let n = ((t_max - t_min) / dt + 1e-9).floor() as usize;
    (0..=n).map(|i| t_min + i as f64 * dt).collect()
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn point_cells(p: &PhasePoint) -> [Cell; 3] {
    [p.x.into(), p.y.into(), p.theta.into()]
}

pub fn orbit(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let o = &cfg.orbit;
    let seg = integrate_orbit(&th, cfg.initial_point(), (o.t_min, o.t_max), &cfg.tolerances())
        .map_err(|e| CliError::numerical("orbit", e))?;
    let mut t = Table::new(
        "orbit",
        &["t", "x", "y", "theta", "lambda", "V_lambda", "kappa_p", "big_k", "kappa_tilde"],
    );
    for s in sample_times(o.t_min, o.t_max, o.dt) {
        let p = seg.state(s).map_err(|e| CliError::numerical("orbit", e))?;
        let jet = th.lambda_jet(&p);
        let c = th.curvatures(&gauge, &p);
        let [x, y, z] = point_cells(&p);
        t.push(vec![
            s.into(),
            x,
            y,
            z,
            jet.lambda.into(),
            jet.v_lambda.into(),
            c.kappa_p.into(),
            c.big_k.into(),
            c.kappa_tilde.into(),
        ]);
    }
    let stats = seg.stats();
    let results = json!({
        "samples": t.rows.len(),
        "gauge": gauge.label(),
        "accepted_steps": stats.accepted,
        "rejected_steps": stats.rejected,
    });
    Ok(Report {
        command: "orbit",
        tables: vec![t],
        results,
    })
}

pub fn cocycle(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let o = &cfg.orbit;
    let num_err = |e| CliError::numerical("cocycle", e);
    let seg = integrate_orbit(&th, cfg.initial_point(), (o.t_min, o.t_max), &cfg.tolerances()).map_err(num_err)?;
    let xi = SigmaCovector::at_origin(&seg, gauge.clone(), o.covector[0], o.covector[1]);
    let mut t = Table::new("cocycle", &["t", "x_c", "y_c", "z", "m", "det_Gamma"]);
    let mut worst_det: f64 = 0.0;
    for s in sample_times(o.t_min, o.t_max, o.dt) {
        let c = propagate_sigma(&seg, &gauge, &xi, s).map_err(num_err)?;
        let m = seg.damping_m(s).map_err(num_err)?;
        let det = cocycle_matrix(&seg, &GaugeSpec::damped(), s, CocycleFlavor::Gamma).map_err(num_err)?.det();
        worst_det = worst_det.max((det - 1.0).abs());
        t.push(vec![s.into(), c.x.into(), c.y.into(), (c.y / m).into(), m.into(), det.into()]);
    }
    let results = json!({
        "samples": t.rows.len(),
        "gauge": gauge.label(),
        "max_abs_det_gamma_minus_one": num(worst_det),
    });
    Ok(Report {
        command: "cocycle",
        tables: vec![t],
        results,
    })
}

pub fn curvature_scan(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let [nx, ny, nt] = cfg.scan.grid;
    let values: Vec<_> = uniform_grid(nx, ny, nt)
        .into_par_iter()
        .map(|p| (p, th.curvatures(&gauge, &p)))
        .collect();
    let mut t = Table::new("curvature_scan", &["x", "y", "theta", "kappa_p", "big_k", "kappa_tilde"]);
    for (p, c) in &values {
        let [x, y, z] = point_cells(p);
        t.push(vec![x, y, z, c.kappa_p.into(), c.big_k.into(), c.kappa_tilde.into()]);
    }
    let stats = |f: &dyn Fn(&thermolab::model::GaugeCurvatures) -> f64| {
        json!({
            "min": num(min_of(values.iter().map(|v| f(&v.1)))),
            "max": num(max_of(values.iter().map(|v| f(&v.1)))),
            "max_abs": num(max_of(values.iter().map(|v| f(&v.1).abs()))),
        })
    };
    let results = json!({
        "gauge": gauge.label(),
        "grid": cfg.scan.grid,
        "kappa_p": stats(&|c| c.kappa_p),
        "big_k": stats(&|c| c.big_k),
        "kappa_tilde": stats(&|c| c.kappa_tilde),
    });
    Ok(Report {
        command: "curvature-scan",
        tables: vec![t],
        results,
    })
}

pub fn conjugate_scan_cmd(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let s = &cfg.scan;
    let points = seeded_points(s.seed, s.samples);
    let reports = conjugate_scan(&th, &points, s.t_max, s.conjugate_tol, &cfg.tolerances())
        .map_err(|e| CliError::numerical("conjugate-scan", e))?;
    let mut t = Table::new("conjugate_scan", &["index", "x", "y", "theta", "first_conjugate_time"]);
    for (i, (p, r)) in points.iter().zip(&reports).enumerate() {
        let [x, y, z] = point_cells(p);
        t.push(vec![i.into(), x, y, z, r.time.into()]);
    }
    let detections = reports.iter().filter(|r| r.time.is_some()).count();
    let results = json!({
        "samples": points.len(),
        "t_max": s.t_max,
        "seed": s.seed,
        "detections": detections,
    });
    Ok(Report {
        command: "conjugate-scan",
        tables: vec![t],
        results,
    })
}

pub fn green_scan(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let s = &cfg.scan;
    let scan = transversality_scan(&th, s.grid, &gauge, &s.schedule, s.green_tol, &cfg.tolerances())
        .map_err(|e| CliError::numerical("green-scan", e))?;
    let mut t = Table::new("green_scan", &["x", "y", "theta", "stable", "unstable", "gap", "converged"]);
    for c in &scan.cells {
        let [x, y, z] = point_cells(&c.point);
        t.push(vec![x, y, z, c.stable.into(), c.unstable.into(), c.gap().into(), c.converged().into()]);
    }
    let range = |f: &dyn Fn(&thermolab::analysis::TransversalityCell) -> Option<f64>| {
        let v: Vec<f64> = scan.cells.iter().filter_map(f).collect();
        json!({ "min": num(min_of(v.iter().copied())), "max": num(max_of(v.iter().copied())) })
    };
    let results = json!({
        "gauge": gauge.label(),
        "grid": s.grid,
        "min_gap": scan.min_gap.map(num),
        "continuity_modulus": num(scan.continuity_modulus),
        "non_converged": scan.non_converged,
        "stable": range(&|c| c.stable),
        "unstable": range(&|c| c.unstable),
    });
    Ok(Report {
        command: "green-scan",
        tables: vec![t],
        results,
    })
}

/// Exponents along both Green lines at the configured initial point and at
/// `scan.samples` seeded points, over `[0, scan.t_max]`.
pub fn lyapunov(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let s = &cfg.scan;
    let t0 = s.schedule.iter().copied().fold(0.0, f64::max);
    let mut points = vec![cfg.initial_point()];
    points.extend(seeded_points(s.seed, s.samples));
    let tol = cfg.tolerances();
    let rows: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let ctx = |e| CliError::numerical(format!("lyapunov sample {i}"), e);
            let orbit = integrate_orbit(&th, p, (-t0, t0.max(s.t_max)), &tol).map_err(ctx)?;
            let st = green_slope(&orbit, Side::Stable, &gauge, &s.schedule, s.green_tol).map_err(ctx)?;
            let un = green_slope(&orbit, Side::Unstable, &gauge, &s.schedule, s.green_tol).map_err(ctx)?;
            let chi_s = lyapunov_on_orbit(&orbit, &st.line().unit_covector(), s.t_max, s.renorm).map_err(ctx)?;
            let chi_u = lyapunov_on_orbit(&orbit, &un.line().unit_covector(), s.t_max, s.renorm).map_err(ctx)?;
            Ok((p, st.slope, un.slope, chi_s, chi_u, st.converged && un.converged))
        })
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(
        "lyapunov",
        &["index", "x", "y", "theta", "stable_slope", "unstable_slope", "chi_stable", "chi_unstable", "converged"],
    );
    for (i, r) in rows.iter().enumerate() {
        let [x, y, z] = point_cells(&r.0);
        t.push(vec![i.into(), x, y, z, r.1.into(), r.2.into(), r.3.into(), r.4.into(), r.5.into()]);
    }
    let n = rows.len() as f64;
    let results = json!({
        "gauge": gauge.label(),
        "horizon": s.t_max,
        "samples": rows.len(),
        "mean_chi_stable": num(rows.iter().map(|r| r.3).sum::<f64>() / n),
        "mean_chi_unstable": num(rows.iter().map(|r| r.4).sum::<f64>() / n),
        "non_converged": rows.iter().filter(|r| !r.5).count(),
    });
    Ok(Report {
        command: "lyapunov",
        tables: vec![t],
        results,
    })
}

pub fn domination(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let s = &cfg.scan;
    let points = seeded_points(s.seed, s.samples);
    let fit = domination_estimate(&th, &points, s.horizon, &gauge, &s.schedule, s.green_tol, &cfg.tolerances())
        .map_err(|e| CliError::numerical("domination", e))?;
    let mut t = Table::new("domination", &["sample", "t", "log_a"]);
    for (k, (time, v)) in fit.data.iter().enumerate() {
        t.push(vec![(k / s.horizon).into(), (*time).into(), (*v).into()]);
    }
    let results = json!({
        "gauge": gauge.label(),
        "horizon": s.horizon,
        "samples": points.len(),
        "fitted_slope": num(fit.slope),
        "fitted_offset": num(fit.offset),
        "per_sample_slopes": fit.per_sample_slopes.iter().map(|v| num(*v)).collect::<Vec<_>>(),
    });
    Ok(Report {
        command: "domination",
        tables: vec![t],
        results,
    })
}

pub fn hopf(cfg: &ExperimentConfig) -> CliResult<Report> {
    let th = cfg.thermostat()?;
    let gauge = cfg.gauge_spec()?;
    let r = hopf_check(&th, &gauge, cfg.scan.hopf_grid);
    let results = json!({
        "gauge": r.gauge.label(),
        "grid": r.grid,
        "lhs": num(r.lhs),
        "rhs": num(r.rhs),
        "margin": num(r.margin),
        "secondary": num(r.secondary),
    });
    Ok(Report {
        command: "hopf",
        tables: Vec::new(),
        results,
    })
}
