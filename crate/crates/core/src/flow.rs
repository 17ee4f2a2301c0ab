//! The thermostat flow `φ_t` on `SM`.
//!
//! Orbits are integrated in the chart with unwrapped angles and an extra
//! quadrature state `q(t) = ∫₀ᵗ V(λ)(φ_τ v) dτ`, which yields the damping
//! factor `m(t) = exp(−q(t)/2)` without a second pass.

use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::model::Thermostat;
use crate::ode::{integrate, DenseSolution, SolverStats, Tolerances};

/// Chart components of `F = X + λV` at `p`.
pub fn generator(thermostat: &Thermostat, p: &PhasePoint) -> [f64; 3] {
    thermostat.generator(p)
}

/// Dense trajectory of `φ_t` on `[t_min, t_max]`.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    thermostat: Thermostat,
    initial: PhasePoint,
    forward: DenseSolution<4>,
    backward: DenseSolution<4>,
    tol: Tolerances,
}

/// Slack allowed when a query lands just outside the span through rounding.
const SPAN_SLACK: f64 = 1e-12;

impl OrbitSegment {
    pub fn thermostat(&self) -> &Thermostat {
        &self.thermostat
    }

    pub fn initial(&self) -> PhasePoint {
        self.initial
    }

    pub fn t_min(&self) -> f64 {
        self.backward.t_end()
    }

    pub fn t_max(&self) -> f64 {
        self.forward.t_end()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Accepted/rejected steps and evaluations, summed over both directions.
    pub fn stats(&self) -> SolverStats {
        let (a, b) = (self.forward.stats, self.backward.stats);
        SolverStats {
            accepted: a.accepted + b.accepted,
            rejected: a.rejected + b.rejected,
            evaluations: a.evaluations + b.evaluations,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min() - SPAN_SLACK && t <= self.t_max() + SPAN_SLACK
    }

    pub(crate) fn check_span(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfSpan {
                t,
                t_min: self.t_min(),
                t_max: self.t_max(),
            })
        }
    }

    /// `(x, y, θ, q)` with unwrapped angles; the caller guarantees `t` is in span.
    pub(crate) fn raw(&self, t: f64) -> [f64; 4] {
        let t = t.clamp(self.t_min(), self.t_max());
        if t >= 0.0 {
            self.forward.eval(t)
        } else {
            self.backward.eval(t)
        }
    }

    /// Unwrapped chart point at `t`; valid as an evaluation point since every
    /// field is 2π-periodic.
    pub(crate) fn point_unwrapped(&self, t: f64) -> PhasePoint {
        let s = self.raw(t);
        PhasePoint::unwrapped(s[0], s[1], s[2])
    }

    /// Unwrapped chart coordinates `(x, y, θ)` at `t`.
    pub fn coords_unwrapped(&self, t: f64) -> Result<[f64; 3]> {
        self.check_span(t)?;
        let s = self.raw(t);
        Ok([s[0], s[1], s[2]])
    }

    /// `φ_t(v)` reduced to `[0, 2π)³`.
    pub fn state(&self, t: f64) -> Result<PhasePoint> {
        self.check_span(t)?;
        Ok(self.point_unwrapped(t).normalized())
    }

    /// `∫₀ᵗ V(λ)(φ_τ v) dτ`.
    pub fn integral_v_lambda(&self, t: f64) -> Result<f64> {
        self.check_span(t)?;
        Ok(self.raw(t)[3])
    }

    /// Damping factor `m(t) = exp(−½ ∫₀ᵗ V(λ)(φ_τ v) dτ)`.
    pub fn damping_m(&self, t: f64) -> Result<f64> {
        Ok((-0.5 * self.integral_v_lambda(t)?).exp())
    }
}

/// Integrates the flow from `v0` over `span = (t_min, t_max)` with `t_min ≤ 0 ≤ t_max`.
pub fn integrate_orbit(
    thermostat: &Thermostat,
    v0: PhasePoint,
    span: (f64, f64),
    tol: &Tolerances,
) -> Result<OrbitSegment> {
    let (t_min, t_max) = span;
    if !(t_min.is_finite() && t_max.is_finite()) || t_min > 0.0 || t_max < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "orbit span must satisfy t_min <= 0 <= t_max, got [{t_min}, {t_max}]"
        )));
    }
    let v0 = v0.normalized();
    let rhs = |_t: f64, s: &[f64; 4], ds: &mut [f64; 4]| {
        *ds = thermostat.generator_with_divergence(s[0], s[1], s[2]);
    };
    let y0 = [v0.x, v0.y, v0.theta, 0.0];
    let forward = integrate(&rhs, 0.0, y0, t_max, tol)?;
    let backward = integrate(&rhs, 0.0, y0, t_min, tol)?;
    Ok(OrbitSegment {
        thermostat: thermostat.clone(),
        initial: v0,
        forward,
        backward,
        tol: *tol,
    })
}

/// Integrates `(g, λ)` forward by `t`, flips, integrates `(g, λ^ℱ)` forward
/// by `t`, flips again, and returns the distance to `v0`.
pub fn reverse_orbit_check(
    thermostat: &Thermostat,
    v0: PhasePoint,
    t: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("reversal time must be positive, got {t}")));
    }
    let there = integrate_orbit(thermostat, v0, (0.0, t), tol)?;
    let end = there.state(t)?.flipped();
    let flipped = thermostat.flipped();
    let back = integrate_orbit(&flipped, end, (0.0, t), tol)?;
    let home = back.state(t)?.flipped();
    Ok(home.distance(&v0.normalized()))
}

/// Base point `π(φ_t(x0, y0, θ0))` in unwrapped chart coordinates.
pub fn exp_map(
    thermostat: &Thermostat,
    x0: f64,
    y0: f64,
    theta0: f64,
    t: f64,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("exp_map needs t >= 0, got {t}")));
    }
    let orbit = integrate_orbit(thermostat, PhasePoint::new(x0, y0, theta0), (0.0, t), tol)?;
    let c = orbit.coords_unwrapped(t)?;
    Ok((c[0], c[1]))
}

/// Three orbits from `θ0 − ε, θ0, θ0 + ε` sharing a base point; the
/// centered difference gives `∂_{θ0} exp` at every time in `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct ExpJacobianProbe {
    center: OrbitSegment,
    plus: OrbitSegment,
    minus: OrbitSegment,
    eps: f64,
}

impl ExpJacobianProbe {
    pub fn new(
        thermostat: &Thermostat,
        x0: f64,
        y0: f64,
        theta0: f64,
        t_max: f64,
        eps: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        let orbit = |th: f64| integrate_orbit(thermostat, PhasePoint::new(x0, y0, th), (0.0, t_max), tol);
        let center = orbit(theta0)?;
        let plus = orbit(theta0 + eps)?;
        let minus = orbit(theta0 - eps)?;
        Ok(Self {
            center,
            plus,
            minus,
            eps,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.center.t_max()
    }

    /// `∂_{θ0} exp(t)` in chart components.
    pub fn jacobian(&self, t: f64) -> Result<[f64; 2]> {
        let p = self.plus.coords_unwrapped(t)?;
        let m = self.minus.coords_unwrapped(t)?;
        let d = 2.0 * self.eps;
        Ok([(p[0] - m[0]) / d, (p[1] - m[1]) / d])
    }

    /// Component of `∂_{θ0} exp(t)` along `J γ̇(t)`, in the metric at the endpoint.
    pub fn normal(&self, t: f64) -> Result<f64> {
        let j = self.jacobian(t)?;
        let c = self.center.coords_unwrapped(t)?;
        let ef = self.center.thermostat().surface.f.eval(c[0], c[1]).exp();
        let (s, co) = c[2].sin_cos();
        Ok(ef * (co * j[1] - s * j[0]))
    }
}

/// Signed normal component of `∂_{θ0} exp(t)`; its zeros are the conjugate
/// points of the base point along the orbit. For `λ ≡ 0` on the flat torus it
/// equals `t`.
pub fn exp_jacobian_fd(
    thermostat: &Thermostat,
    x0: f64,
    y0: f64,
    theta0: f64,
    t: f64,
    eps: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    ExpJacobianProbe::new(thermostat, x0, y0, theta0, t, eps, tol)?.normal(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Basis2, ConformalTorus, FourierField2};
    use crate::model::IntensityModel;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn tight() -> Tolerances {
        Tolerances::new(1e-12, 1e-14)
    }

    #[test]
    fn straight_geodesic() {
        let t = Thermostat::flat(IntensityModel::zero());
        let o = integrate_orbit(&t, PhasePoint::new(0.0, 0.0, 0.0), (0.0, 5.0), &Tolerances::default()).unwrap();
        let s = o.state(5.0).unwrap();
        assert!((s.x - 5.0).abs() < 1e-9 && s.y.abs() < 1e-12 && s.theta.abs() < 1e-12);
        assert!(o.state(5.5).is_err());
    }

    #[test]
    fn s2_theta_approaches_attracting_circle() {
        let t = Thermostat::flat(IntensityModel::cos_mode(2, 1.0));
        let o = integrate_orbit(&t, PhasePoint::new(1.0, 2.0, 0.3), (0.0, 20.0), &Tolerances::default()).unwrap();
        assert!((o.state(20.0).unwrap().theta - FRAC_PI_4).abs() < 1e-3);
    }

    #[test]
    fn s1_invariant_circle() {
        let t = Thermostat::flat(IntensityModel::cos_mode(1, 1.0));
        let o = integrate_orbit(&t, PhasePoint::new(0.0, 0.0, FRAC_PI_2), (-3.0, 4.0), &tight()).unwrap();
        for i in 0..=14 {
            let tt = -3.0 + 0.5 * i as f64;
            let c = o.coords_unwrapped(tt).unwrap();
            assert!((c[2] - FRAC_PI_2).abs() < 1e-12);
            assert!((c[1] - tt).abs() < 1e-10);
            // V(λ) = −1 along the circle, so m(t) = e^{t/2}
            let m = o.damping_m(tt).unwrap();
            assert!((m - (tt / 2.0).exp()).abs() < 1e-9 * m);
        }
    }

    #[test]
    fn state_at_zero_is_initial() {
        let t = Thermostat::flat(IntensityModel::cos_mode(2, 1.0).plus(&IntensityModel::magnetic(
            FourierField2::from_terms([(1, 0, Basis2::CosCos, 0.1)]),
        )));
        let v0 = PhasePoint::new(0.4, 5.0, 2.0);
        let o = integrate_orbit(&t, v0, (-2.0, 2.0), &Tolerances::default()).unwrap();
        assert!(o.state(0.0).unwrap().distance(&v0) < 1e-14);
        assert!(o.stats().accepted > 0);
    }

    #[test]
    fn semigroup() {
        let surface = ConformalTorus::new(FourierField2::from_terms([(1, 1, Basis2::CosCos, 0.1)]));
        let model = IntensityModel::cos_mode(1, 0.5).plus(&IntensityModel::sin_mode(2, 0.3));
        let t = Thermostat::new(surface, model);
        let tol = Tolerances::default();
        let o = integrate_orbit(&t, PhasePoint::new(1.0, 2.0, 3.0), (0.0, 6.0), &tol).unwrap();
        let mid = o.state(2.5).unwrap();
        let o2 = integrate_orbit(&t, mid, (0.0, 3.5), &tol).unwrap();
        let d = o2.state(3.5).unwrap().distance(&o.state(6.0).unwrap());
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn tolerance_refinement_reduces_error() {
        let t = Thermostat::flat(IntensityModel::constant(1.0));
        // unit circle: returns after 2π
        let err = |rel: f64| {
            let tol = Tolerances::new(rel, rel * 1e-2);
            let o = integrate_orbit(&t, PhasePoint::new(0.0, 0.0, 0.0), (0.0, TAU), &tol).unwrap();
            let c = o.coords_unwrapped(TAU).unwrap();
            (c[0].powi(2) + c[1].powi(2)).sqrt()
        };
        let (e1, e2) = (err(1e-6), err(1e-9));
        assert!(e2 < e1 && e2 < 1e-7, "{e1} {e2}");
    }

    #[test]
    fn fiber_equation_matches_scalar_reference() {
        let model = IntensityModel::cos_mode(2, 1.0).plus(&IntensityModel::sin_mode(1, 0.4));
        let t = Thermostat::flat(model.clone());
        let tol = Tolerances::new(1e-11, 1e-13);
        let o = integrate_orbit(&t, PhasePoint::new(0.5, 0.5, 2.0), (0.0, 10.0), &tol).unwrap();
        let scalar = |_t: f64, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = model.eval(0.0, 0.0, y[0]);
        let r = integrate(&scalar, 0.0, [2.0], 10.0, &tol).unwrap();
        for i in 0..=20 {
            let tt = 0.5 * i as f64;
            let th = o.coords_unwrapped(tt).unwrap()[2];
            assert!((th - r.eval(tt)[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn reversal_of_geodesic_flow() {
        let t = Thermostat::flat(IntensityModel::zero());
        let r = reverse_orbit_check(&t, PhasePoint::new(0.3, 0.7, 1.1), 7.0, &tight()).unwrap();
        assert!(r < 1e-9);
    }

    #[test]
    fn exp_map_examples() {
        let tol = tight();
        let flat = Thermostat::flat(IntensityModel::zero());
        let (x, y) = exp_map(&flat, 1.0, 2.0, 0.0, 1.0, &tol).unwrap();
        assert!((x - 2.0).abs() < 1e-12 && (y - 2.0).abs() < 1e-12);

        let c = 1.5;
        let mag = Thermostat::flat(IntensityModel::constant(c));
        let (x, y) = exp_map(&mag, 1.0, 2.0, 0.0, TAU / c, &tol).unwrap();
        assert!((x - 1.0).abs() < 1e-9 && (y - 2.0).abs() < 1e-9);

        let s1 = Thermostat::flat(IntensityModel::cos_mode(1, 1.0));
        let (x, y) = exp_map(&s1, 1.0, 2.0, FRAC_PI_2, 3.0, &tol).unwrap();
        assert!((x - 1.0).abs() < 1e-10 && (y - 5.0).abs() < 1e-10);
    }

    #[test]
    fn exp_jacobian_of_flat_geodesic_flow_is_t() {
        let flat = Thermostat::flat(IntensityModel::zero());
        let n = exp_jacobian_fd(&flat, 0.2, 0.3, 0.9, 2.0, 1e-4, &tight()).unwrap();
        assert!((n - 2.0).abs() < 1e-4);
    }

    #[test]
    fn exp_jacobian_of_magnetic_flow() {
        let mag = Thermostat::flat(IntensityModel::constant(2.0));
        let probe = ExpJacobianProbe::new(&mag, 0.0, 0.0, 0.4, 3.0, 1e-4, &tight()).unwrap();
        for i in 1..30 {
            let t = 0.1 * i as f64;
            let n = probe.normal(t).unwrap();
            assert!((n - (2.0 * t).sin() / 2.0).abs() < 1e-6, "{t} {n}");
        }
        assert!(probe.normal(PI / 2.0).unwrap().abs() < 1e-6);
    }
}
