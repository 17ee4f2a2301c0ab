//! Lifted dynamics on the characteristic set `Σ`.
//!
//! A covector `ξ = x β + y φ_p` with `φ_p = ψ_λ − pβ` evolves along the orbit
//! by
//!
//! ```text
//! ẋ = −p x + κ_p y,        ẏ = −x − (V(λ) − p) y.
//! ```
//!
//! With `m(t) = exp(−½∫V(λ))` the rescaled `z = y/m` solves `z̈ + κ̃ z = 0`.
//! Long transports are split into chunks of length at most `Δ = 1`; after
//! each chunk the vector is renormalized and the log scale accumulated.

use crate::error::{Error, Result};
use crate::flow::OrbitSegment;
use crate::geometry::PhasePoint;
use crate::model::{GaugeSpec, Thermostat};
use crate::ode::{integrate, DenseSolution, Tolerances};

/// Length of a transport chunk between renormalizations.
pub const RENORM_INTERVAL: f64 = 1.0;

/// Default cap on `|w|` for Riccati blow-up detection.
pub const RICCATI_CAP: f64 = 1e6;

/// Tolerance on the anchor point of a covector against the orbit state.
const ANCHOR_TOL: f64 = 1e-8;

/// A covector `x β + y φ_p` at `φ_{anchor_time}(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCovector {
    pub gauge: GaugeSpec,
    pub x: f64,
    pub y: f64,
    pub anchor: PhasePoint,
    pub anchor_time: f64,
}

impl SigmaCovector {
    pub fn new(gauge: GaugeSpec, x: f64, y: f64, anchor: PhasePoint, anchor_time: f64) -> Self {
        Self {
            gauge,
            x,
            y,
            anchor,
            anchor_time,
        }
    }

    /// Covector anchored at the initial point of `orbit`.
    pub fn at_origin(orbit: &OrbitSegment, gauge: GaugeSpec, x: f64, y: f64) -> Self {
        Self::new(gauge, x, y, orbit.initial(), 0.0)
    }

    /// `|x| + |y|`.
    pub fn norm(&self) -> f64 {
        self.x.abs() + self.y.abs()
    }

    pub fn line(&self) -> SigmaLine {
        SigmaLine {
            slope: if self.y == 0.0 { None } else { Some(self.x / self.y) },
            gauge: self.gauge.clone(),
            anchor: self.anchor,
            anchor_time: self.anchor_time,
        }
    }

    /// The same covector in the basis `{β, φ_{p'}}`: `x' = x + (p' − p) y`.
    pub fn to_gauge(&self, thermostat: &Thermostat, gauge: &GaugeSpec) -> Self {
        let dp = thermostat.gauge_eval(gauge, &self.anchor).0 - thermostat.gauge_eval(&self.gauge, &self.anchor).0;
        Self {
            gauge: gauge.clone(),
            x: self.x + dp * self.y,
            ..self.clone()
        }
    }
}

/// Projective class of a covector; `slope = None` is the cohorizontal line `ℍ* = ℝβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaLine {
    pub slope: Option<f64>,
    pub gauge: GaugeSpec,
    pub anchor: PhasePoint,
    pub anchor_time: f64,
}

impl SigmaLine {
    pub fn is_cohorizontal(&self) -> bool {
        self.slope.is_none()
    }

    /// `s' = s + (p' − p)`; `ℍ*` is fixed by every basis change.
    pub fn to_gauge(&self, thermostat: &Thermostat, gauge: &GaugeSpec) -> Self {
        let dp = thermostat.gauge_eval(gauge, &self.anchor).0 - thermostat.gauge_eval(&self.gauge, &self.anchor).0;
        Self {
            slope: self.slope.map(|s| s + dp),
            gauge: gauge.clone(),
            ..self.clone()
        }
    }

    /// Unit covector (`|x| + |y| = 1`) spanning the line.
    pub fn unit_covector(&self) -> SigmaCovector {
        let (x, y) = match self.slope {
            Some(s) => (s / (s.abs() + 1.0), 1.0 / (s.abs() + 1.0)),
            None => (1.0, 0.0),
        };
        SigmaCovector::new(self.gauge.clone(), x, y, self.anchor, self.anchor_time)
    }
}

/// `z'/z` at a state, given the slope `s = x/y` in gauge `p`:
/// `−s + p − V(λ)/2`. In gauge `V(λ)/2` this is `w = −s`.
pub fn z_log_derivative(slope: f64, p: f64, v_lambda: f64) -> f64 {
    -slope + p - 0.5 * v_lambda
}

/// `u = w − V(λ)/2`.
pub fn u_from_w(w: f64, v_lambda: f64) -> f64 {
    w - 0.5 * v_lambda
}

/// A covector transported with renormalization: `(x, y)·e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled2 {
    pub v: [f64; 2],
    pub log_scale: f64,
}

impl Scaled2 {
    pub fn new(v: [f64; 2]) -> Self {
        Self { v, log_scale: 0.0 }
    }

    pub fn value(&self) -> [f64; 2] {
        let s = self.log_scale.exp();
        [self.v[0] * s, self.v[1] * s]
    }

    /// `ln(|x| + |y|)` of the represented vector.
    pub fn log_norm(&self) -> f64 {
        (self.v[0].abs() + self.v[1].abs()).ln() + self.log_scale
    }

    pub fn slope(&self) -> Option<f64> {
        if self.v[1] == 0.0 {
            None
        } else {
            Some(self.v[0] / self.v[1])
        }
    }

    fn renormalize(&mut self) {
        let n = self.v[0].abs() + self.v[1].abs();
        if n > 0.0 && n.is_finite() {
            self.v = [self.v[0] / n, self.v[1] / n];
            self.log_scale += n.ln();
        }
    }
}

fn sigma_matrix(thermostat: &Thermostat, gauge: &GaugeSpec, p: &PhasePoint) -> [[f64; 2]; 2] {
    let c = thermostat.coefficients(gauge, p);
    [[-c.p, c.kappa_p], [-1.0, -(c.v_lambda - c.p)]]
}

fn check_time(orbit: &OrbitSegment, t: f64) -> Result<()> {
    if orbit.contains(t) {
        Ok(())
    } else {
        Err(Error::OutOfSpan {
            t,
            t_min: orbit.t_min(),
            t_max: orbit.t_max(),
        })
    }
}

/// Chunk boundaries from `a` to `b` with steps of at most [`RENORM_INTERVAL`].
fn chunks(a: f64, b: f64) -> Vec<(f64, f64)> {
    let n = ((b - a).abs() / RENORM_INTERVAL).ceil().max(1.0) as usize;
    (0..n)
        .map(|i| {
            let t0 = a + (b - a) * i as f64 / n as f64;
            let t1 = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
            (t0, t1)
        })
        .collect()
}

/// Transports `(x, y)` from `t_from` to `t_to` in the basis of `gauge`,
/// returning the end value and the values at `samples` (which must lie
/// between the two times), each with its own log scale.
pub(crate) fn transport_sampled(
    orbit: &OrbitSegment,
    gauge: &GaugeSpec,
    t_from: f64,
    v: [f64; 2],
    t_to: f64,
    samples: &[f64],
) -> Result<(Scaled2, Vec<Scaled2>)> {
    check_time(orbit, t_from)?;
    check_time(orbit, t_to)?;
    let thermo = orbit.thermostat();
    let rhs = |t: f64, s: &[f64; 2], ds: &mut [f64; 2]| {
        let a = sigma_matrix(thermo, gauge, &orbit.point_unwrapped(t));
        ds[0] = a[0][0] * s[0] + a[0][1] * s[1];
        ds[1] = a[1][0] * s[0] + a[1][1] * s[1];
    };
    let mut cur = Scaled2::new(v);
    cur.renormalize();
    let mut out = vec![Scaled2::new([f64::NAN; 2]); samples.len()];
    for &t in samples {
        let inside = if t_to >= t_from { t >= t_from && t <= t_to } else { t <= t_from && t >= t_to };
        if !inside {
            return Err(Error::InvalidArgument(format!(
                "sample time {t} outside transport interval [{t_from}, {t_to}]"
            )));
        }
    }
    for (i, &t) in samples.iter().enumerate() {
        if t == t_from {
            out[i] = cur;
        }
    }
    for (a, b) in chunks(t_from, t_to) {
        let sol = integrate(&rhs, a, cur.v, b, orbit.tolerances())?;
        for (i, &t) in samples.iter().enumerate() {
            if t != t_from && sol.contains(t) && t != a {
                out[i] = Scaled2 {
                    v: sol.eval(t),
                    log_scale: cur.log_scale,
                };
            }
        }
        cur.v = sol.final_state();
        cur.renormalize();
    }
    Ok((cur, out))
}

/// Transports `(x, y)` between two times on the orbit.
pub fn transport(orbit: &OrbitSegment, gauge: &GaugeSpec, t_from: f64, v: [f64; 2], t_to: f64) -> Result<Scaled2> {
    transport_sampled(orbit, gauge, t_from, v, t_to, &[]).map(|r| r.0)
}

fn check_anchor(orbit: &OrbitSegment, xi: &SigmaCovector) -> Result<()> {
    check_time(orbit, xi.anchor_time)?;
    let on_orbit = orbit.state(xi.anchor_time)?;
    if on_orbit.distance(&xi.anchor) > ANCHOR_TOL {
        return Err(Error::AnchorMismatch {
            anchor: xi.anchor_time,
            from: xi.anchor_time,
        });
    }
    Ok(())
}

/// `dφ_{t−s}^{−⊤} ξ` for `ξ` anchored at `φ_s(v)`, expressed in `gauge` at `φ_t(v)`.
pub fn transport_sigma(orbit: &OrbitSegment, gauge: &GaugeSpec, xi: &SigmaCovector, t: f64) -> Result<SigmaCovector> {
    check_anchor(orbit, xi)?;
    check_time(orbit, t)?;
    let xi = xi.to_gauge(orbit.thermostat(), gauge);
    let end = transport(orbit, gauge, xi.anchor_time, [xi.x, xi.y], t)?;
    let [x, y] = end.value();
    Ok(SigmaCovector::new(gauge.clone(), x, y, orbit.state(t)?, t))
}

/// Propagates a covector anchored at `v = φ_0(v)` to time `t`.
pub fn propagate_sigma(orbit: &OrbitSegment, gauge: &GaugeSpec, xi0: &SigmaCovector, t: f64) -> Result<SigmaCovector> {
    if xi0.anchor_time != 0.0 {
        return Err(Error::AnchorMismatch {
            anchor: xi0.anchor_time,
            from: 0.0,
        });
    }
    transport_sigma(orbit, gauge, xi0, t)
}

/// `m(t) = exp(−½∫₀ᵗ V(λ))` along the orbit.
pub fn damping_m(orbit: &OrbitSegment, t: f64) -> Result<f64> {
    orbit.damping_m(t)
}

/// A time-dependent curvature `κ̃(t)` driving `z̈ + κ̃ z = 0`.
pub trait KappaProfile {
    fn kappa_tilde(&self, t: f64) -> f64;

    /// Admissible time interval.
    fn span(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Integrator settings for equations driven by this profile.
    fn tolerances(&self) -> Tolerances {
        Tolerances::new(1e-12, 1e-14)
    }
}

impl KappaProfile for OrbitSegment {
    fn kappa_tilde(&self, t: f64) -> f64 {
        self.thermostat().kappa_tilde(&self.point_unwrapped(t))
    }

    fn span(&self) -> (f64, f64) {
        (self.t_min(), self.t_max())
    }

    fn tolerances(&self) -> Tolerances {
        *OrbitSegment::tolerances(self)
    }
}

/// `κ̃ ≡ c`, detached from any surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile(pub f64);

impl KappaProfile for ConstantProfile {
    fn kappa_tilde(&self, _t: f64) -> f64 {
        self.0
    }
}

/// `κ̃(t)` given by a closure.
pub struct FnProfile<F>(pub F);

impl<F: Fn(f64) -> f64> KappaProfile for FnProfile<F> {
    fn kappa_tilde(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

fn check_profile_span<P: KappaProfile + ?Sized>(profile: &P, t: f64) -> Result<()> {
    let (lo, hi) = profile.span();
    if t < lo - 1e-12 || t > hi + 1e-12 {
        return Err(Error::OutOfSpan { t, t_min: lo, t_max: hi });
    }
    Ok(())
}

/// Dense solution of `z̈ + κ̃ z = 0` as the state `(z, ż)` on `[0, t_end]`.
pub fn z_solution<P: KappaProfile + ?Sized>(
    profile: &P,
    z0: f64,
    zdot0: f64,
    t_end: f64,
    tol: &Tolerances,
) -> Result<DenseSolution<2>> {
    check_profile_span(profile, t_end)?;
    let rhs = |t: f64, s: &[f64; 2], ds: &mut [f64; 2]| {
        ds[0] = s[1];
        ds[1] = -profile.kappa_tilde(t) * s[0];
    };
    integrate(&rhs, 0.0, [z0, zdot0], t_end, tol)
}

/// `(z(t), ż(t))` for `z̈ + κ̃ z = 0`.
pub fn propagate_z<P: KappaProfile + ?Sized>(
    profile: &P,
    z0: f64,
    zdot0: f64,
    t: f64,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let s = z_solution(profile, z0, zdot0, t, tol)?.final_state();
    Ok((s[0], s[1]))
}

/// `Ψ` (lifted cocycle in a gauge) or `Γ = Ψ̃ / m` (gauge `V(λ)/2` only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CocycleFlavor {
    Psi,
    Gamma,
}

/// The 2×2 matrix of `dφ^{−⊤}` on `Σ` from `φ_{t_from}(v)` to `φ_{t_to}(v)`,
/// acting on column vectors `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleMatrix {
    pub entries: [[f64; 2]; 2],
    pub t_from: f64,
    pub t_to: f64,
    pub gauge: GaugeSpec,
    pub flavor: CocycleFlavor,
    /// `ln |det|`, accumulated over chunks.
    pub log_abs_det: f64,
    pub det_sign: f64,
}

impl CocycleMatrix {
    /// Determinant from the chunked product; free of the cancellation in
    /// `ad − bc` once the entries are large.
    pub fn det(&self) -> f64 {
        self.det_sign * self.log_abs_det.exp()
    }

    /// `ad − bc` of the stored entries.
    pub fn det_from_entries(&self) -> f64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.entries;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn mul(&self, rhs: &CocycleMatrix) -> [[f64; 2]; 2] {
        mat_mul(&self.entries, &rhs.entries)
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Cocycle between two times of the orbit.
pub fn cocycle_between(
    orbit: &OrbitSegment,
    gauge: &GaugeSpec,
    t_from: f64,
    t_to: f64,
    flavor: CocycleFlavor,
) -> Result<CocycleMatrix> {
    if flavor == CocycleFlavor::Gamma && *gauge != GaugeSpec::damped() {
        return Err(Error::GaugeMismatch(format!(
            "Gamma requires gauge scaled_v_lambda(0.5), got {}",
            gauge.label()
        )));
    }
    check_time(orbit, t_from)?;
    check_time(orbit, t_to)?;
    let thermo = orbit.thermostat();
    // columns (M00, M10) and (M01, M11)
    let rhs = |t: f64, s: &[f64; 4], ds: &mut [f64; 4]| {
        let a = sigma_matrix(thermo, gauge, &orbit.point_unwrapped(t));
        ds[0] = a[0][0] * s[0] + a[0][1] * s[1];
        ds[1] = a[1][0] * s[0] + a[1][1] * s[1];
        ds[2] = a[0][0] * s[2] + a[0][1] * s[3];
        ds[3] = a[1][0] * s[2] + a[1][1] * s[3];
    };
    let mut total = [[1.0, 0.0], [0.0, 1.0]];
    let mut log_abs_det = 0.0;
    let mut det_sign = 1.0;
    for (a, b) in chunks(t_from, t_to) {
        let s = integrate(&rhs, a, [1.0, 0.0, 0.0, 1.0], b, orbit.tolerances())?.final_state();
        let chunk = [[s[0], s[2]], [s[1], s[3]]];
        let d = chunk[0][0] * chunk[1][1] - chunk[0][1] * chunk[1][0];
        log_abs_det += d.abs().ln();
        det_sign *= d.signum();
        total = mat_mul(&chunk, &total);
    }
    if flavor == CocycleFlavor::Gamma {
        let q = orbit.integral_v_lambda(t_to)? - orbit.integral_v_lambda(t_from)?;
        let m = (-0.5 * q).exp();
        for row in total.iter_mut() {
            for e in row.iter_mut() {
                *e /= m;
            }
        }
        // ln m² = −q
        log_abs_det += q;
    }
    Ok(CocycleMatrix {
        entries: total,
        t_from,
        t_to,
        gauge: gauge.clone(),
        flavor,
        log_abs_det,
        det_sign,
    })
}

/// `Ψ_t(v)` or `Γ_t(v)`.
pub fn cocycle_matrix(orbit: &OrbitSegment, gauge: &GaugeSpec, t: f64, flavor: CocycleFlavor) -> Result<CocycleMatrix> {
    cocycle_between(orbit, gauge, 0.0, t, flavor)
}

/// Samples of `w` for `ẇ + w² + κ̃ = 0` and the blow-up time, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    pub blow_up: Option<f64>,
}

/// Sampling step for [`riccati_w`].
const RICCATI_SAMPLE: f64 = 0.01;

/// Integrates the damped Riccati equation through its linearization
/// `w = ż / z`, `z(0) = 1`, `ż(0) = w0`; blow-up is the first time `|w|`
/// reaches `cap`.
pub fn riccati_w<P: KappaProfile + ?Sized>(
    profile: &P,
    w0: f64,
    t_end: f64,
    cap: f64,
    tol: &Tolerances,
) -> Result<RiccatiSolution> {
    let sol = z_solution(profile, 1.0, w0, t_end, tol)?;
    let w_at = |t: f64| {
        let s = sol.eval(t);
        s[1] / s[0]
    };
    let excess = |t: f64| {
        let s = sol.eval(t);
        s[1].abs() - cap * s[0].abs()
    };
    let n = (t_end.abs() / RICCATI_SAMPLE).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    let mut prev_z = 1.0;
    for i in 0..=n {
        let t = if i == n { t_end } else { t_end * i as f64 / n as f64 };
        let s = sol.eval(t);
        if excess(t) >= 0.0 || s[0] * prev_z < 0.0 {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let sm = sol.eval(mid);
                if excess(mid) >= 0.0 || sm[0] * prev_z < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if (hi - lo).abs() < 1e-12 {
                    break;
                }
            }
            return Ok(RiccatiSolution {
                times,
                w,
                blow_up: Some(hi),
            });
        }
        times.push(t);
        w.push(w_at(t));
        prev = t;
        prev_z = s[0];
    }
    Ok(RiccatiSolution {
        times,
        w,
        blow_up: None,
    })
}
