//! Conjugate points, Green bundles, Lyapunov exponents and domination.

use rayon::prelude::*;

use crate::cocycle::{
    transport, transport_sampled, z_log_derivative, z_solution, KappaProfile, SigmaCovector, SigmaLine,
};
use crate::error::{Error, Result};
use crate::flow::{integrate_orbit, ExpJacobianProbe, OrbitSegment};
use crate::geometry::PhasePoint;
use crate::model::{GaugeSpec, Thermostat};
use crate::ode::Tolerances;

/// Step of the sign-change scan for conjugate points.
pub const CONJUGATE_SCAN_STEP: f64 = 0.05;

/// Doubling schedule of Green-limit times `t₀`.
pub const DEFAULT_SCHEDULE: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

/// Convergence threshold on consecutive Green slopes.
pub const DEFAULT_GREEN_TOL: f64 = 1e-8;

/// Step of the flow derivatives `F(r)`, `F(w)`, `F(p̂)`.
pub const FLOW_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Jacobi,
    ExpFd,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::Jacobi => "jacobi",
            Detector::ExpFd => "exp-fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateReport {
    pub initial: Option<PhasePoint>,
    pub time: Option<f64>,
    pub detector: Detector,
    /// Final bisection bracket.
    pub bracket: Option<(f64, f64)>,
    /// `|detector value|` at the reported time.
    pub residual: f64,
}

/// Refined zero time, its final bracket and the residual there.
type Zero = (f64, (f64, f64), f64);

/// First sign change of `f` on `(0, t_max]`, scanned at `step` and refined by
/// bisection to `tol`.
fn first_zero<F: Fn(f64) -> Result<f64>>(f: F, t_max: f64, step: f64, tol: f64) -> Result<Option<Zero>> {
    let n = (t_max / step).ceil() as usize;
    let mut prev_t = step.min(t_max);
    let mut prev = f(prev_t)?;
    for i in 2..=n.max(1) {
        let t = (step * i as f64).min(t_max);
        let v = f(t)?;
        if v == 0.0 || v.signum() != prev.signum() {
            let (mut lo, mut hi, mut flo) = (prev_t, t, prev);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            return Ok(Some((root, (lo, hi), f(root)?.abs())));
        }
        prev_t = t;
        prev = v;
    }
    Ok(None)
}

/// Jacobi detector: first zero of `z` with `z(0) = 0`, `ż(0) = 1`.
pub fn conjugate_report<P: KappaProfile + ?Sized>(
    profile: &P,
    t_max: f64,
    tol: f64,
    initial: Option<PhasePoint>,
) -> Result<ConjugateReport> {
    let sol = z_solution(profile, 0.0, 1.0, t_max, &profile.tolerances())?;
    let found = first_zero(|t| Ok(sol.eval(t)[0]), t_max, CONJUGATE_SCAN_STEP, tol)?;
    Ok(ConjugateReport {
        initial,
        time: found.map(|f| f.0),
        detector: Detector::Jacobi,
        bracket: found.map(|f| f.1),
        residual: found.map_or(0.0, |f| f.2),
    })
}

/// First conjugate time along an orbit or an abstract profile, if any in `(0, t_max]`.
pub fn first_conjugate_time<P: KappaProfile + ?Sized>(profile: &P, t_max: f64, tol: f64) -> Result<Option<f64>> {
    Ok(conjugate_report(profile, t_max, tol, None)?.time)
}

/// Exponential-map detector: first zero of the normal component of `∂_{θ0} exp`.
pub fn conjugate_report_exp(
    thermostat: &Thermostat,
    v0: PhasePoint,
    t_max: f64,
    eps: f64,
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<ConjugateReport> {
    let probe = ExpJacobianProbe::new(thermostat, v0.x, v0.y, v0.theta, t_max, eps, ode_tol)?;
    let found = first_zero(|t| probe.normal(t), t_max, CONJUGATE_SCAN_STEP, tol)?;
    Ok(ConjugateReport {
        initial: Some(v0),
        time: found.map(|f| f.0),
        detector: Detector::ExpFd,
        bracket: found.map(|f| f.1),
        residual: found.map_or(0.0, |f| f.2),
    })
}

/// Jacobi detector over many initial conditions, in input order.
pub fn conjugate_scan(
    thermostat: &Thermostat,
    points: &[PhasePoint],
    t_max: f64,
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<Vec<ConjugateReport>> {
    points
        .par_iter()
        .map(|p| {
            let orbit = integrate_orbit(thermostat, *p, (0.0, t_max), ode_tol)?;
            conjugate_report(&orbit, t_max, tol, Some(*p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Stable,
    Unstable,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Stable => "stable",
            Side::Unstable => "unstable",
        }
    }
}

/// Finite-`t₀` approximations of a Green line at one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenEstimate {
    pub anchor: PhasePoint,
    pub anchor_time: f64,
    pub side: Side,
    pub gauge: GaugeSpec,
    pub t0: Vec<f64>,
    /// `x_c/y_c` at the anchor for each `t₀`; `None` when `y_c = 0`.
    pub slopes: Vec<Option<f64>>,
    /// `ż_{t₀}/z_{t₀}` at the anchor for each `t₀`.
    pub z_log_derivatives: Vec<Option<f64>>,
    /// Last finite slope of the sequence.
    pub slope: Option<f64>,
    pub converged: bool,
    /// Some `t₀` produced `y_c(0) = 0`.
    pub conjugate_flag: bool,
    /// `slope` in the basis `{β, ψ_λ}`.
    pub zero_gauge_slope: Option<f64>,
}

impl GreenEstimate {
    pub fn line(&self) -> SigmaLine {
        SigmaLine {
            slope: self.slope,
            gauge: self.gauge.clone(),
            anchor: self.anchor,
            anchor_time: self.anchor_time,
        }
    }

    /// `ż_{t₀}(0)` is non-decreasing in `t₀` on the stable side and
    /// non-increasing on the unstable side.
    pub fn is_monotone(&self) -> bool {
        let v: Vec<f64> = self.z_log_derivatives.iter().flatten().copied().collect();
        v.windows(2).all(|w| {
            let slack = 1e-12 * (1.0 + w[0].abs());
            match self.side {
                Side::Stable => w[1] >= w[0] - slack,
                Side::Unstable => w[1] <= w[0] + slack,
            }
        })
    }
}

/// Green slopes at a set of orbit times, computed from one transport per `t₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenField {
    pub side: Side,
    pub gauge: GaugeSpec,
    pub times: Vec<f64>,
    pub slopes: Vec<f64>,
    pub converged: bool,
    pub conjugate_flag: bool,
}

/// Transports `β` from `t_end ± t₀` across `times` and records the slopes.
fn slopes_for_t0(
    orbit: &OrbitSegment,
    side: Side,
    gauge: &GaugeSpec,
    times: &[f64],
    t0: f64,
) -> Result<Vec<Option<f64>>> {
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (from, to) = match side {
        Side::Stable => (hi + t0, lo),
        Side::Unstable => (lo - t0, hi),
    };
    let (_, samples) = transport_sampled(orbit, gauge, from, [1.0, 0.0], to, times)?;
    Ok(samples.iter().map(|s| s.slope()).collect())
}

fn max_t0(schedule: &[f64]) -> Result<f64> {
    if schedule.is_empty() || schedule.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("t0 schedule must be non-empty and positive".into()));
    }
    Ok(schedule.iter().copied().fold(0.0, f64::max))
}

/// Green slopes at every time in `times`, iterating the schedule until the
/// largest change between consecutive `t₀` drops below `tol`.
pub fn green_slope_field(
    orbit: &OrbitSegment,
    side: Side,
    gauge: &GaugeSpec,
    times: &[f64],
    schedule: &[f64],
    tol: f64,
) -> Result<GreenField> {
    max_t0(schedule)?;
    let mut prev: Option<Vec<f64>> = None;
    let mut conjugate_flag = false;
    let mut converged = false;
    let mut current = vec![f64::NAN; times.len()];
    for &t0 in schedule {
        let s = slopes_for_t0(orbit, side, gauge, times, t0)?;
        if s.iter().any(|v| v.is_none()) {
            conjugate_flag = true;
            prev = None;
            continue;
        }
        current = s.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        if let Some(p) = &prev {
            let diff = p.iter().zip(&current).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if diff < tol {
                converged = true;
                break;
            }
        }
        prev = Some(current.clone());
    }
    Ok(GreenField {
        side,
        gauge: gauge.clone(),
        times: times.to_vec(),
        slopes: current,
        converged,
        conjugate_flag,
    })
}

/// Green slope at `φ_{anchor_time}(v)`.
pub fn green_slope_at(
    orbit: &OrbitSegment,
    side: Side,
    gauge: &GaugeSpec,
    anchor_time: f64,
    schedule: &[f64],
    tol: f64,
) -> Result<GreenEstimate> {
    max_t0(schedule)?;
    let thermo = orbit.thermostat();
    let anchor = orbit.state(anchor_time)?;
    let coeff = thermo.coefficients(gauge, &anchor);
    let mut t0s = Vec::new();
    let mut slopes = Vec::new();
    let mut zl = Vec::new();
    let mut converged = false;
    for &t0 in schedule {
        let s = slopes_for_t0(orbit, side, gauge, &[anchor_time], t0)?[0];
        let done = matches!((slopes.last(), s), (Some(Some(a)), Some(b)) if (a - b).abs() < tol);
        t0s.push(t0);
        slopes.push(s);
        zl.push(s.map(|s| z_log_derivative(s, coeff.p, coeff.v_lambda)));
        if done {
            converged = true;
            break;
        }
    }
    let slope = slopes.iter().rev().flatten().next().copied();
    let conjugate_flag = slopes.iter().any(|s| s.is_none());
    let mut est = GreenEstimate {
        anchor,
        anchor_time,
        side,
        gauge: gauge.clone(),
        t0: t0s,
        slopes,
        z_log_derivatives: zl,
        slope,
        converged,
        conjugate_flag,
        zero_gauge_slope: None,
    };
    est.zero_gauge_slope = est.line().to_gauge(thermo, &GaugeSpec::Zero).slope;
    Ok(est)
}

/// Green slope at the initial point of the orbit.
pub fn green_slope(orbit: &OrbitSegment, side: Side, gauge: &GaugeSpec, schedule: &[f64], tol: f64) -> Result<GreenEstimate> {
    green_slope_at(orbit, side, gauge, 0.0, schedule, tol)
}

/// Comparison of a computed Green line with a claimed one, both as slopes in
/// the basis `{β, ψ_λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineClaimCheck {
    pub claimed_zero_gauge_slope: f64,
    pub computed_zero_gauge_slope: Option<f64>,
    pub discrepancy: bool,
}

pub fn check_line_claim(estimate: &GreenEstimate, claimed_zero_gauge_slope: f64, tol: f64) -> LineClaimCheck {
    let computed = estimate.zero_gauge_slope;
    LineClaimCheck {
        claimed_zero_gauge_slope,
        computed_zero_gauge_slope: computed,
        discrepancy: computed.is_none_or(|c| (c - claimed_zero_gauge_slope).abs() > tol),
    }
}

/// Sample times `c − 2h, c − h, c, c + h, c + 2h` around each center, for
/// fourth-order flow derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStencil {
    pub centers: Vec<f64>,
    pub h: f64,
}

impl FlowStencil {
    pub fn new(centers: Vec<f64>, h: f64) -> Self {
        Self { centers, h }
    }

    pub fn times(&self) -> Vec<f64> {
        self.centers
            .iter()
            .flat_map(|&c| (-2..=2).map(move |k| c + k as f64 * self.h))
            .collect()
    }

    pub fn value(&self, values: &[f64], i: usize) -> f64 {
        values[5 * i + 2]
    }

    /// `(−v(c+2h) + 8v(c+h) − 8v(c−h) + v(c−2h)) / 12h`.
    pub fn derivative(&self, values: &[f64], i: usize) -> f64 {
        let v = &values[5 * i..5 * i + 5];
        (-v[4] + 8.0 * v[3] - 8.0 * v[1] + v[0]) / (12.0 * self.h)
    }
}

/// `max |r² + (V(λ) − 2p) r + κ_p − F(r)|` over the stencil centers, for
/// slope values `r` sampled at `stencil.times()`.
pub fn riccati_residual(orbit: &OrbitSegment, gauge: &GaugeSpec, stencil: &FlowStencil, r: &[f64]) -> Result<f64> {
    let thermo = orbit.thermostat();
    let mut worst: f64 = 0.0;
    for (i, &c) in stencil.centers.iter().enumerate() {
        let p = orbit.state(c)?;
        let k = thermo.coefficients(gauge, &p);
        let rv = stencil.value(r, i);
        let res = rv * rv + (k.v_lambda - 2.0 * k.p) * rv + k.kappa_p - stencil.derivative(r, i);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

/// [`riccati_residual`] for a slope given as a function of orbit time.
pub fn riccati_residual_fn<F: Fn(f64) -> f64>(
    orbit: &OrbitSegment,
    gauge: &GaugeSpec,
    r: F,
    centers: &[f64],
    h: f64,
) -> Result<f64> {
    let stencil = FlowStencil::new(centers.to_vec(), h);
    let values: Vec<f64> = stencil.times().into_iter().map(r).collect();
    riccati_residual(orbit, gauge, &stencil, &values)
}

/// Riccati residual of the numerically computed Green slopes.
pub fn green_riccati_residual(
    orbit: &OrbitSegment,
    side: Side,
    gauge: &GaugeSpec,
    centers: &[f64],
    schedule: &[f64],
    tol: f64,
) -> Result<f64> {
    let stencil = FlowStencil::new(centers.to_vec(), FLOW_FD_STEP);
    let field = green_slope_field(orbit, side, gauge, &stencil.times(), schedule, tol)?;
    riccati_residual(orbit, gauge, &stencil, &field.slopes)
}

/// `max |κ_{p̂}|` with `p̂ = V(λ) − r`, `r` the unstable slope in the basis
/// `{β, φ_{V(λ)}}` sampled at `stencil.times()`.
pub fn synthesize_zero_gauge(orbit: &OrbitSegment, stencil: &FlowStencil, r_unstable: &[f64]) -> Result<f64> {
    let thermo = orbit.thermostat();
    let times = stencil.times();
    let p_hat: Vec<f64> = times
        .iter()
        .zip(r_unstable)
        .map(|(&t, &r)| Ok(thermo.lambda_jet(&orbit.state(t)?).v_lambda - r))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, &c) in stencil.centers.iter().enumerate() {
        let p = orbit.state(c)?;
        let k = thermo.kappa_from_values(&p, stencil.value(&p_hat, i), stencil.derivative(&p_hat, i));
        worst = worst.max(k.abs());
    }
    Ok(worst)
}

/// [`synthesize_zero_gauge`] with the unstable slopes computed on the orbit.
pub fn synthesize_zero_gauge_green(orbit: &OrbitSegment, centers: &[f64], schedule: &[f64], tol: f64) -> Result<f64> {
    let stencil = FlowStencil::new(centers.to_vec(), FLOW_FD_STEP);
    let field = green_slope_field(orbit, Side::Unstable, &GaugeSpec::thermostat(), &stencil.times(), schedule, tol)?;
    synthesize_zero_gauge(orbit, &stencil, &field.slopes)
}

/// Finite-time exponent `(1/T) ln(‖ξ(T)‖/‖ξ(0)‖)` with renormalization every
/// `delta`. Norms are `|x| + |y|` in the gauge `V(λ)/2`.
pub fn lyapunov_on_orbit(orbit: &OrbitSegment, xi0: &SigmaCovector, t: f64, delta: f64) -> Result<f64> {
    if !(t > 0.0 && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("need T > 0 and delta > 0, got {t}, {delta}")));
    }
    let thermo = orbit.thermostat();
    let xi = xi0.to_gauge(thermo, &GaugeSpec::damped());
    let n0 = xi.norm();
    if n0 == 0.0 {
        return Err(Error::InvalidArgument("initial covector must be non-zero".into()));
    }
    let mut v = [xi.x / n0, xi.y / n0];
    let mut t_cur = xi.anchor_time;
    let t_end = xi.anchor_time + t;
    let mut log_sum = 0.0;
    while t_cur < t_end {
        let t_next = (t_cur + delta).min(t_end);
        let s = transport(orbit, &xi.gauge, t_cur, v, t_next)?;
        let n = s.v[0].abs() + s.v[1].abs();
        log_sum += s.log_scale + n.ln();
        v = [s.v[0] / n, s.v[1] / n];
        t_cur = t_next;
    }
    Ok(log_sum / t)
}

/// Finite-time Lyapunov exponent of `ξ0 ∈ Σ(v0)` over `[0, T]`.
pub fn lyapunov_exponent(
    thermostat: &Thermostat,
    v0: PhasePoint,
    xi0: (GaugeSpec, f64, f64),
    t: f64,
    delta: f64,
    ode_tol: &Tolerances,
) -> Result<f64> {
    let orbit = integrate_orbit(thermostat, v0, (0.0, t), ode_tol)?;
    let xi = SigmaCovector::at_origin(&orbit, xi0.0, xi0.1, xi0.2);
    lyapunov_on_orbit(&orbit, &xi, t, delta)
}

/// Green slopes on one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityCell {
    pub point: PhasePoint,
    pub stable: Option<f64>,
    pub unstable: Option<f64>,
    pub stable_converged: bool,
    pub unstable_converged: bool,
}

impl TransversalityCell {
    pub fn converged(&self) -> bool {
        self.stable_converged && self.unstable_converged && self.stable.is_some() && self.unstable.is_some()
    }

    pub fn gap(&self) -> Option<f64> {
        Some((self.stable? - self.unstable?).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityScan {
    pub gauge: GaugeSpec,
    pub dims: [usize; 3],
    /// Cells in `(x, y, θ)` lexicographic order, `θ` fastest.
    pub cells: Vec<TransversalityCell>,
    /// Minimum `|r^s − r^u|` over converged cells.
    pub min_gap: Option<f64>,
    /// Largest slope jump between periodic grid neighbours.
    pub continuity_modulus: f64,
    pub non_converged: usize,
}

/// Uniform periodic grid on `[0, 2π)³`, `θ` fastest.
pub fn uniform_grid(nx: usize, ny: usize, ntheta: usize) -> Vec<PhasePoint> {
    let tau = crate::TAU;
    let mut out = Vec::with_capacity(nx * ny * ntheta);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..ntheta {
                out.push(PhasePoint::new(
                    tau * i as f64 / nx as f64,
                    tau * j as f64 / ny as f64,
                    tau * k as f64 / ntheta as f64,
                ));
            }
        }
    }
    out
}

fn green_pair(
    thermostat: &Thermostat,
    p: PhasePoint,
    gauge: &GaugeSpec,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<(GreenEstimate, GreenEstimate)> {
    let t0 = max_t0(schedule)?;
    let orbit = integrate_orbit(thermostat, p, (-t0, t0), ode_tol)?;
    let s = green_slope(&orbit, Side::Stable, gauge, schedule, tol)?;
    let u = green_slope(&orbit, Side::Unstable, gauge, schedule, tol)?;
    Ok((s, u))
}

/// Stable and unstable Green slopes at one point.
pub fn green_slopes_at_point(
    thermostat: &Thermostat,
    p: PhasePoint,
    gauge: &GaugeSpec,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<(GreenEstimate, GreenEstimate)> {
    green_pair(thermostat, p, gauge, schedule, tol, ode_tol)
}

pub fn transversality_scan(
    thermostat: &Thermostat,
    dims: [usize; 3],
    gauge: &GaugeSpec,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<TransversalityScan> {
    let grid = uniform_grid(dims[0], dims[1], dims[2]);
    let cells: Vec<TransversalityCell> = grid
        .par_iter()
        .map(|&p| {
            let (s, u) = green_pair(thermostat, p, gauge, schedule, tol, ode_tol)?;
            Ok(TransversalityCell {
                point: p,
                stable: s.slope,
                unstable: u.slope,
                stable_converged: s.converged && !s.conjugate_flag,
                unstable_converged: u.converged && !u.conjugate_flag,
            })
        })
        .collect::<Result<_>>()?;
    let min_gap = cells
        .iter()
        .filter(|c| c.converged())
        .filter_map(|c| c.gap())
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
    let non_converged = cells.iter().filter(|c| !c.converged()).count();
    let idx = |i: usize, j: usize, k: usize| (i * dims[1] + j) * dims[2] + k;
    let mut modulus: f64 = 0.0;
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let a = &cells[idx(i, j, k)];
                let neighbours = [
                    idx((i + 1) % dims[0], j, k),
                    idx(i, (j + 1) % dims[1], k),
                    idx(i, j, (k + 1) % dims[2]),
                ];
                for n in neighbours {
                    let b = &cells[n];
                    for (x, y) in [(a.stable, b.stable), (a.unstable, b.unstable)] {
                        if let (Some(x), Some(y)) = (x, y) {
                            modulus = modulus.max((x - y).abs());
                        }
                    }
                }
            }
        }
    }
    Ok(TransversalityScan {
        gauge: gauge.clone(),
        dims,
        cells,
        min_gap,
        continuity_modulus: modulus,
        non_converged,
    })
}

/// `κ_w + ¼(r^s − r^u)²` at one point, with `w = −(r^s + r^u)/2` in the basis `{β, ψ_λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaWSample {
    pub point: PhasePoint,
    pub stable: f64,
    pub unstable: f64,
    pub kappa_w: f64,
    pub residual: f64,
    pub converged: bool,
}

pub fn kappa_w_at(
    thermostat: &Thermostat,
    p: PhasePoint,
    h: f64,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<KappaWSample> {
    let t0 = max_t0(schedule)?;
    let orbit = integrate_orbit(thermostat, p, (-t0 - 2.0 * h, t0 + 2.0 * h), ode_tol)?;
    let stencil = FlowStencil::new(vec![0.0], h);
    let times = stencil.times();
    let s = green_slope_field(&orbit, Side::Stable, &GaugeSpec::Zero, &times, schedule, tol)?;
    let u = green_slope_field(&orbit, Side::Unstable, &GaugeSpec::Zero, &times, schedule, tol)?;
    let w: Vec<f64> = s.slopes.iter().zip(&u.slopes).map(|(a, b)| -0.5 * (a + b)).collect();
    let w0 = stencil.value(&w, 0);
    let kappa_w = thermostat.kappa_from_values(&p, w0, stencil.derivative(&w, 0));
    let (rs, ru) = (stencil.value(&s.slopes, 0), stencil.value(&u.slopes, 0));
    Ok(KappaWSample {
        point: p,
        stable: rs,
        unstable: ru,
        kappa_w,
        residual: (kappa_w + 0.25 * (rs - ru).powi(2)).abs(),
        converged: s.converged && u.converged,
    })
}

/// Identity residuals over a set of points, in input order.
pub fn kappa_w_identity(
    thermostat: &Thermostat,
    points: &[PhasePoint],
    h: f64,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<Vec<KappaWSample>> {
    points
        .par_iter()
        .map(|&p| kappa_w_at(thermostat, p, h, schedule, tol, ode_tol))
        .collect()
}

/// Least-squares fit of `ln a(t)` against `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationFit {
    pub slope: f64,
    pub offset: f64,
    /// `(t, ln a(t))` for every sample and time.
    pub data: Vec<(f64, f64)>,
    pub per_sample_slopes: Vec<f64>,
}

fn least_squares(data: &[(f64, f64)]) -> (f64, f64) {
    let n = data.len() as f64;
    let mx = data.iter().map(|d| d.0).sum::<f64>() / n;
    let my = data.iter().map(|d| d.1).sum::<f64>() / n;
    let sxy: f64 = data.iter().map(|d| (d.0 - mx) * (d.1 - my)).sum();
    let sxx: f64 = data.iter().map(|d| (d.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `ln a(t)` for `t = 1..=T` at one sample, with
/// `a(t) = ‖Ψ_t ξ_s‖ · ‖Ψ_{−t}(φ_t v) ξ_u(φ_t v)‖`.
pub fn domination_series(
    thermostat: &Thermostat,
    v: PhasePoint,
    t_max: usize,
    gauge: &GaugeSpec,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<Vec<(f64, f64)>> {
    if t_max == 0 {
        return Err(Error::InvalidArgument("domination horizon must be at least 1".into()));
    }
    let t0 = max_t0(schedule)?;
    let tt = t_max as f64;
    let orbit = integrate_orbit(thermostat, v, (-t0, tt + t0), ode_tol)?;
    let times: Vec<f64> = (1..=t_max).map(|t| t as f64).collect();
    let s = green_slope_field(&orbit, Side::Stable, gauge, &[0.0], schedule, tol)?;
    let u = green_slope_field(&orbit, Side::Unstable, gauge, &times, schedule, tol)?;
    let unit = |slope: f64| [slope / (slope.abs() + 1.0), 1.0 / (slope.abs() + 1.0)];
    let (_, fwd) = transport_sampled(&orbit, gauge, 0.0, unit(s.slopes[0]), tt, &times)?;
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let back = transport(&orbit, gauge, t, unit(u.slopes[i]), 0.0)?;
            Ok((t, fwd[i].log_norm() + back.log_norm()))
        })
        .collect()
}

pub fn domination_estimate(
    thermostat: &Thermostat,
    samples: &[PhasePoint],
    t_max: usize,
    gauge: &GaugeSpec,
    schedule: &[f64],
    tol: f64,
    ode_tol: &Tolerances,
) -> Result<DominationFit> {
    let series: Vec<Vec<(f64, f64)>> = samples
        .par_iter()
        .map(|&v| domination_series(thermostat, v, t_max, gauge, schedule, tol, ode_tol))
        .collect::<Result<_>>()?;
    let per_sample_slopes = series.iter().map(|s| least_squares(s).0).collect();
    let data: Vec<(f64, f64)> = series.into_iter().flatten().collect();
    let (slope, offset) = least_squares(&data);
    Ok(DominationFit {
        slope,
        offset,
        data,
        per_sample_slopes,
    })
}
