//! Liouville quadrature over `SM` and the total-curvature integrals.

use rayon::prelude::*;

use crate::error::Result;
use crate::flow::integrate_orbit;
use crate::geometry::{ConformalTorus, PhasePoint};
use crate::model::{GaugeSpec, Thermostat};
use crate::ode::Tolerances;
use crate::TAU;

/// Euler characteristic of the torus.
pub const EULER_CHARACTERISTIC: f64 = 0.0;

/// Neumaier-compensated sum in slice order.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `∫_{SM} obs dμ` with `dμ = e^{2f} dx dy dθ`, by the periodic trapezoid
/// rule on an `n_x × n_y × n_θ` grid. Slabs of constant `x` are summed in
/// parallel and combined in index order, so the result does not depend on
/// the worker count.
pub fn liouville_integrate<F>(surface: &ConformalTorus, observable: F, nx: usize, ny: usize, ntheta: usize) -> f64
where
    F: Fn(&PhasePoint) -> f64 + Sync,
{
    let (nx, ny, nt) = (nx.max(1), ny.max(1), ntheta.max(1));
    let slabs: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = TAU * i as f64 / nx as f64;
            compensated_sum((0..ny).flat_map(|j| {
                let y = TAU * j as f64 / ny as f64;
                let w = surface.area_density(x, y);
                let obs = &observable;
                (0..nt).map(move |k| {
                    let th = TAU * k as f64 / nt as f64;
                    w * obs(&PhasePoint::unwrapped(x, y, th))
                })
            }))
        })
        .collect();
    let cell = TAU.powi(3) / (nx * ny * nt) as f64;
    compensated_sum(slabs) * cell
}

/// Both sides of `∫ κ_p dμ ≤ ∫ (p − V(λ))² dμ` and `2πχ + ∫ (λ² − V(λ)²) dμ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfReport {
    pub gauge: GaugeSpec,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub secondary: f64,
    pub grid: [usize; 3],
}

pub fn hopf_check(thermostat: &Thermostat, gauge: &GaugeSpec, grid: [usize; 3]) -> HopfReport {
    let [nx, ny, nt] = grid;
    let surface = &thermostat.surface;
    let lhs = liouville_integrate(surface, |p| thermostat.kappa_p(gauge, p), nx, ny, nt);
    let rhs = liouville_integrate(
        surface,
        |p| {
            let c = thermostat.coefficients(gauge, p);
            (c.p - c.v_lambda).powi(2)
        },
        nx,
        ny,
        nt,
    );
    let lv = liouville_integrate(
        surface,
        |p| {
            let j = thermostat.lambda_jet(p);
            j.lambda * j.lambda - j.v_lambda * j.v_lambda
        },
        nx,
        ny,
        nt,
    );
    HopfReport {
        gauge: gauge.clone(),
        lhs,
        rhs,
        margin: rhs - lhs,
        secondary: TAU * EULER_CHARACTERISTIC + lv,
        grid,
    }
}

/// Ratio of the `μ`-volume of the image of a small cube under `φ_t` to its
/// original volume: `det(Dφ_t) e^{2f(φ_t v)} / e^{2f(v)}`, with `Dφ_t` by
/// central differences of half-width `h`. Equals `m(t)^{−2}` in general and
/// `1` for magnetic intensities.
pub fn liouville_volume_ratio(thermostat: &Thermostat, v0: PhasePoint, t: f64, h: f64, tol: &Tolerances) -> Result<f64> {
    let base = v0.normalized();
    let c = base.coords();
    let end = |d: [f64; 3]| -> Result<[f64; 3]> {
        let p = PhasePoint::unwrapped(c[0] + d[0], c[1] + d[1], c[2] + d[2]);
        let o = integrate_orbit(thermostat, p, (0.0, t), tol)?;
        o.coords_unwrapped(t)
    };
    let mut jac = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut dp = [0.0; 3];
        dp[k] = h;
        let mut dm = [0.0; 3];
        dm[k] = -h;
        let (a, b) = (end(dp)?, end(dm)?);
        for i in 0..3 {
            jac[i][k] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
        - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
        + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    let e = end([0.0; 3])?;
    let s = &thermostat.surface;
    Ok(det * s.area_density(e[0], e[1]) / s.area_density(c[0], c[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Basis2, FourierField2};
    use crate::model::IntensityModel;

    #[test]
    fn volume_of_sm() {
        let v = liouville_integrate(&ConformalTorus::flat(), |_| 1.0, 8, 8, 8);
        assert!((v - TAU.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn gauss_bonnet() {
        let s = ConformalTorus::new(FourierField2::from_terms([
            (1, 1, Basis2::CosCos, 0.1),
            (2, 0, Basis2::SinCos, 0.05),
        ]));
        let v = liouville_integrate(&s, |p| s.gaussian_curvature(p.x, p.y), 16, 16, 4);
        assert!(v.abs() < 1e-8);
    }

    #[test]
    fn fiber_quadratic() {
        let v = liouville_integrate(
            &ConformalTorus::flat(),
            |p| (2.0 * p.theta).cos().powi(2) - 4.0 * (2.0 * p.theta).sin().powi(2),
            4,
            4,
            16,
        );
        assert!((v / (-1.5 * TAU.powi(3)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hopf_examples() {
        let s1 = Thermostat::flat(IntensityModel::cos_mode(1, 1.0));
        let r = hopf_check(&s1, &GaugeSpec::thermostat(), [8, 8, 16]);
        assert!(r.lhs.abs() < 1e-10 && r.rhs.abs() < 1e-10);
        let s2 = Thermostat::flat(IntensityModel::cos_mode(2, 1.0));
        let r = hopf_check(&s2, &GaugeSpec::damped(), [8, 8, 16]);
        assert!((r.secondary / (-1.5 * TAU.powi(3)) - 1.0).abs() < 1e-9);
        assert!(r.margin >= 0.0);
        let flat = Thermostat::flat(IntensityModel::zero());
        let r = hopf_check(&flat, &GaugeSpec::Zero, [4, 4, 4]);
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn magnetic_flow_preserves_liouville_volume() {
        let s = ConformalTorus::new(FourierField2::from_terms([(1, 1, Basis2::CosCos, 0.1)]));
        let th = Thermostat::new(s, IntensityModel::magnetic(FourierField2::from_terms([(0, 1, Basis2::CosSin, 0.5)])));
        let r = liouville_volume_ratio(&th, PhasePoint::new(0.3, 1.2, 2.0), 1.0, 0.005, &Tolerances::new(1e-12, 1e-14)).unwrap();
        assert!((r - 1.0).abs() < 1e-4, "{r}");
    }
}
