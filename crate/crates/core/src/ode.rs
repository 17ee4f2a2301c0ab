//! Embedded Dormand–Prince 5(4) integrator with proportional-integral step
//! control and the classical 4th-order continuous extension.
//!
//! The solver works in either time direction: when `t_end < t0` the step
//! size is negative and the dense output is indexed by decreasing time.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side of an autonomous-or-not system `y' = f(t, y)` in `N` dimensions.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N], &mut [f64; N]),
{
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]) {
        self(t, y, dy)
    }
}

/// Step-control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest admissible |h|; `f64::INFINITY` disables the cap.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: 1.0,
            max_steps: 5_000_000,
        }
    }
}

impl Tolerances {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol must be positive and finite, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "abs_tol must be positive and finite, got {}",
                self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "max_step must be positive, got {}",
                self.max_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Continuous-extension data of one accepted step.
#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

/// Dense-output trajectory produced by [`integrate`].
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    t0: f64,
    t_end: f64,
    y0: [f64; N],
    y_end: [f64; N],
    steps: Vec<DenseStep<N>>,
    pub stats: SolverStats,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn final_state(&self) -> [f64; N] {
        self.y_end
    }

    /// Whether `t` lies between `t0` and `t_end` (either orientation).
    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t_end {
            (self.t0, self.t_end)
        } else {
            (self.t_end, self.t0)
        };
        t >= lo && t <= hi
    }

    /// Interpolated state at `t`. Callers must check [`Self::contains`].
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.steps.is_empty() || t == self.t0 {
            return self.y0;
        }
        if t == self.t_end {
            return self.y_end;
        }
        let forward = self.t_end >= self.t0;
        // steps are ordered by t0 along the direction of integration
        let idx = self.steps.partition_point(|s| {
            if forward {
                s.t0 + s.h <= t
            } else {
                s.t0 + s.h >= t
            }
        });
        let idx = idx.min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }

    /// Accepted step boundaries, including both end points.
    pub fn mesh(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.t0);
        out.extend(self.steps.iter().map(|s| s.t0 + s.h));
        if let Some(last) = out.last_mut() {
            *last = self.t_end;
        }
        out
    }
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sk = tol.abs_tol + tol.rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sk;
        acc += e * e;
    }
    (acc / N as f64).sqrt()
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    tol: &Tolerances,
) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = tol.abs_tol + tol.rel_tol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(tol.max_step);
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    let mut f1 = [0.0; N];
    sys.rhs(t0 + dir * h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = tol.abs_tol + tol.rel_tol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(tol.max_step)
}

/// Integrates `sys` from `(t0, y0)` to `t_end` and returns the dense solution.
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
) -> Result<DenseSolution<N>> {
    tol.validate()?;
    if !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidArgument("time span must be finite".into()));
    }
    let mut sol = DenseSolution {
        t0,
        t_end,
        y0,
        y_end: y0,
        steps: Vec::new(),
        stats: SolverStats::default(),
    };
    if t_end == t0 {
        return Ok(sol);
    }
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();

    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    const BETA: f64 = 0.04;
    let expo1 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    sys.rhs(t, &y, &mut k1);
    sol.stats.evaluations += 1;
    let mut h = initial_step(sys, t, &y, &k1, dir, tol).min(span);
    sol.stats.evaluations += 1;
    let mut last_rejected = false;

    loop {
        if sol.stats.accepted + sol.stats.rejected >= tol.max_steps {
            return Err(Error::IntegrationFailure {
                t_reached: t,
                reason: format!("step budget of {} exhausted", tol.max_steps),
            });
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                t_reached: t,
                reason: "step size underflow".into(),
            });
        }
        let hs = dir * h;
        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut k5 = [0.0; N];
        let mut k6 = [0.0; N];
        let mut k7 = [0.0; N];
        sys.rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]), &mut k2);
        sys.rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]), &mut k3);
        sys.rhs(
            t + C4 * hs,
            &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            &mut k4,
        );
        sys.rhs(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut k5,
        );
        let t_new = if last { t_end } else { t + hs };
        sys.rhs(
            t_new,
            &axpy(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
            &mut k6,
        );
        let y_new = axpy(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        sys.rhs(t_new, &y_new, &mut k7);
        sol.stats.evaluations += 6;

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, tol);
        if !en.is_finite() {
            sol.stats.rejected += 1;
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }
        let fac11 = en.powf(expo1);
        if en <= 1.0 {
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.steps.push(DenseStep { t0: t, h: hs, r });
            sol.stats.accepted += 1;
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            facold = en.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                sol.y_end = y;
                return Ok(sol);
            }
            let mut h_new = (h / fac).min(tol.max_step);
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            sol.stats.rejected += 1;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let sys = |_t: f64, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let tol = Tolerances::new(1e-11, 1e-13);
        let sol = integrate(&sys, 0.0, [0.0, 1.0], 2.0 * std::f64::consts::PI, &tol).unwrap();
        let y = sol.final_state();
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9, "{y:?}");
        for k in 0..50 {
            let t = 0.123 * k as f64;
            let yi = sol.eval(t);
            assert!((yi[0] - t.sin()).abs() < 1e-8, "dense output at t={t}");
        }
    }

    #[test]
    fn backward_integration() {
        let sys = |_t: f64, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0];
        let sol = integrate(&sys, 0.0, [1.0], -3.0, &Tolerances::new(1e-10, 1e-12)).unwrap();
        assert!((sol.final_state()[0] - (-3.0f64).exp()).abs() < 1e-10);
        assert!((sol.eval(-1.5)[0] - (-1.5f64).exp()).abs() < 1e-9);
        assert!(sol.contains(-2.0) && !sol.contains(0.5));
    }

    #[test]
    fn tolerance_refinement_reduces_error() {
        let sys = |_t: f64, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let err_at = |rtol: f64| {
            let sol = integrate(&sys, 0.0, [1.0, 0.0], 10.0, &Tolerances::new(rtol, rtol * 1e-2)).unwrap();
            (sol.final_state()[0] - 10f64.cos()).abs()
        };
        let coarse = err_at(1e-6);
        let fine = err_at(1e-9);
        assert!(fine < coarse / 50.0, "coarse {coarse:e} fine {fine:e}");
    }

    #[test]
    fn underflow_is_reported() {
        // y' = y^2 blows up at t = 1
        let sys = |_t: f64, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0] * y[0];
        let err = integrate(&sys, 0.0, [1.0], 2.0, &Tolerances::new(1e-8, 1e-10)).unwrap_err();
        match err {
            Error::IntegrationFailure { t_reached, .. } => assert!((t_reached - 1.0).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
