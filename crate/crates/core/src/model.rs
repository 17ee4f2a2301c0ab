//! Intensities `λ(x, y, θ)`, gauges `p`, and the curvature gauges
//! `κ_p = K_g − H(λ) + λ² + F(p) + p(p − V(λ))`, `𝕂 = κ_{V(λ)}`, `κ̃ = κ_{V(λ)/2}`.

use crate::geometry::{frame_from_jet, ConformalTorus, FourierField2, Jet2, PhasePoint};

/// `λ(x, y, θ) = Σ_k a_k(x, y) cos(kθ) + b_k(x, y) sin(kθ)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntensityModel {
    /// `(a_k, b_k)` for `k = 0..=K`; `b_0` is always zero.
    modes: Vec<(FourierField2, FourierField2)>,
}

/// Raw partials of a fiber-Fourier series: value, `∂θ`, `∂θθ`, `∂x`, `∂y`,
/// `∂x∂θ`, `∂y∂θ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeriesJet {
    pub v: f64,
    pub t: f64,
    pub tt: f64,
    pub x: f64,
    pub y: f64,
    pub xt: f64,
    pub yt: f64,
}

impl IntensityModel {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds the model from `(a_k, b_k)` pairs indexed by `k`.
    pub fn from_modes(modes: Vec<(FourierField2, FourierField2)>) -> Self {
        let mut modes = modes;
        if let Some(first) = modes.first_mut() {
            first.1 = FourierField2::zero();
        }
        while modes
            .last()
            .is_some_and(|(a, b)| a.is_zero() && b.is_zero())
        {
            modes.pop();
        }
        Self { modes }
    }

    /// `a(x, y)`: a magnetic intensity.
    pub fn magnetic(a: FourierField2) -> Self {
        Self::from_modes(vec![(a, FourierField2::zero())])
    }

    pub fn constant(c: f64) -> Self {
        Self::magnetic(FourierField2::constant(c))
    }

    /// `c·cos(kθ)`.
    pub fn cos_mode(k: usize, c: f64) -> Self {
        Self::zero().with_mode(k, FourierField2::constant(c), FourierField2::zero())
    }

    /// `c·sin(kθ)`.
    pub fn sin_mode(k: usize, c: f64) -> Self {
        Self::zero().with_mode(k, FourierField2::zero(), FourierField2::constant(c))
    }

    /// Adds `a cos(kθ) + b sin(kθ)` to the model.
    pub fn with_mode(self, k: usize, a: FourierField2, b: FourierField2) -> Self {
        let mut modes = self.modes;
        if modes.len() <= k {
            modes.resize(k + 1, (FourierField2::zero(), FourierField2::zero()));
        }
        let (ref mut ak, ref mut bk) = modes[k];
        *ak = FourierField2::from_terms(
            ak.terms()
                .iter()
                .chain(a.terms())
                .map(|t| (t.j, t.k, t.basis, t.coeff)),
        );
        *bk = FourierField2::from_terms(
            bk.terms()
                .iter()
                .chain(b.terms())
                .map(|t| (t.j, t.k, t.basis, t.coeff)),
        );
        Self::from_modes(modes)
    }

    pub fn plus(self, other: &IntensityModel) -> Self {
        other
            .modes
            .iter()
            .enumerate()
            .fold(self, |acc, (k, (a, b))| acc.with_mode(k, a.clone(), b.clone()))
    }

    pub fn theta_degree(&self) -> usize {
        self.modes.len().saturating_sub(1)
    }

    pub fn modes(&self) -> &[(FourierField2, FourierField2)] {
        &self.modes
    }

    /// Zeroth fiber mode `λ_0 = a_0`.
    pub fn magnetic_component(&self) -> FourierField2 {
        self.modes.first().map(|m| m.0.clone()).unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// True when `V(λ) ≡ 0`, i.e. only the zeroth mode is present.
    pub fn is_magnetic(&self) -> bool {
        self.modes.len() <= 1
    }

    pub fn max_spatial_degree(&self) -> u32 {
        self.modes
            .iter()
            .map(|(a, b)| a.max_degree().max(b.max_degree()))
            .max()
            .unwrap_or(0)
    }

    /// Intensity of the flipped thermostat, `λ^ℱ(x, θ) = −λ(x, θ + π)`.
    pub fn flipped(&self) -> Self {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let s = if k % 2 == 0 { -1.0 } else { 1.0 };
                (a.scaled(s), b.scaled(s))
            })
            .collect();
        Self::from_modes(modes)
    }

    pub fn series_jet(&self, x: f64, y: f64, theta: f64) -> SeriesJet {
        let mut out = SeriesJet::default();
        for (k, (a, b)) in self.modes.iter().enumerate() {
            if a.is_zero() && b.is_zero() {
                continue;
            }
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            let ja = if a.is_zero() { Jet2::default() } else { a.jet(x, y) };
            let jb = if b.is_zero() { Jet2::default() } else { b.jet(x, y) };
            out.v += ja.v * c + jb.v * s;
            out.t += kf * (-ja.v * s + jb.v * c);
            out.tt += -kf * kf * (ja.v * c + jb.v * s);
            out.x += ja.x * c + jb.x * s;
            out.y += ja.y * c + jb.y * s;
            out.xt += kf * (-ja.x * s + jb.x * c);
            out.yt += kf * (-ja.y * s + jb.y * c);
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64, theta: f64) -> f64 {
        self.series_jet(x, y, theta).v
    }
}

pub fn flip_intensity(model: &IntensityModel) -> IntensityModel {
    model.flipped()
}

/// The gauge `p` selecting the basis `{β, φ_p = ψ_λ − pβ}` of `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaugeSpec {
    Zero,
    /// `p = c·V(λ)`.
    ScaledVLambda(f64),
    Custom(IntensityModel),
}

impl GaugeSpec {
    /// `p = V(λ)`, the gauge of the thermostat curvature.
    pub fn thermostat() -> Self {
        GaugeSpec::ScaledVLambda(1.0)
    }

    /// `p = V(λ)/2`, the gauge of the damped thermostat curvature.
    pub fn damped() -> Self {
        GaugeSpec::ScaledVLambda(0.5)
    }

    pub fn label(&self) -> String {
        match self {
            GaugeSpec::Zero => "zero".into(),
            GaugeSpec::ScaledVLambda(c) => format!("scaled_v_lambda({c})"),
            GaugeSpec::Custom(_) => "custom".into(),
        }
    }
}

/// `λ` and its frame derivatives at a state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LambdaJet {
    pub lambda: f64,
    pub v_lambda: f64,
    pub vv_lambda: f64,
    pub h_lambda: f64,
    pub x_lambda: f64,
    /// `F(λ) = X(λ) + λ V(λ)`.
    pub f_lambda: f64,
    /// `F(V(λ)) = X(V(λ)) + λ V²(λ)`.
    pub f_v_lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeCurvatures {
    pub kappa_p: f64,
    pub big_k: f64,
    pub kappa_tilde: f64,
}

/// Everything the lifted dynamics need at one state, for one gauge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCoefficients {
    pub lambda: f64,
    pub v_lambda: f64,
    pub p: f64,
    pub kappa_p: f64,
    pub kappa_tilde: f64,
}

/// A thermostat `(T², g, λ)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thermostat {
    pub surface: ConformalTorus,
    pub intensity: IntensityModel,
}

/// Point data shared by every curvature formula.
struct PointData {
    k_g: f64,
    jet: LambdaJet,
    /// `(X component, θ component)` factors for `X(g) = ex·(c g_x + s g_y) + xt·g_θ`.
    frame: crate::geometry::FrameVectors,
}

impl Thermostat {
    pub fn new(surface: ConformalTorus, intensity: IntensityModel) -> Self {
        Self { surface, intensity }
    }

    pub fn flat(intensity: IntensityModel) -> Self {
        Self::new(ConformalTorus::flat(), intensity)
    }

    /// The thermostat with intensity `λ^ℱ` on the same surface.
    pub fn flipped(&self) -> Self {
        Self::new(self.surface.clone(), self.intensity.flipped())
    }

    fn point_data(&self, p: &PhasePoint) -> PointData {
        let fj = self.surface.exponent_jet(p.x, p.y);
        let frame = frame_from_jet(&fj, p.theta);
        let k_g = if self.surface.is_flat() {
            0.0
        } else {
            -(-2.0 * fj.v).exp() * (fj.xx + fj.yy)
        };
        let s = self.intensity.series_jet(p.x, p.y, p.theta);
        let apply = |fr: &[f64; 3], gx: f64, gy: f64, gt: f64| fr[0] * gx + fr[1] * gy + fr[2] * gt;
        let x_lambda = apply(&frame.x, s.x, s.y, s.t);
        let h_lambda = apply(&frame.h, s.x, s.y, s.t);
        let x_v_lambda = apply(&frame.x, s.xt, s.yt, s.tt);
        let jet = LambdaJet {
            lambda: s.v,
            v_lambda: s.t,
            vv_lambda: s.tt,
            h_lambda,
            x_lambda,
            f_lambda: x_lambda + s.v * s.t,
            f_v_lambda: x_v_lambda + s.v * s.tt,
        };
        PointData { k_g, jet, frame }
    }

    pub fn lambda_jet(&self, p: &PhasePoint) -> LambdaJet {
        self.point_data(p).jet
    }

    fn gauge_with(&self, gauge: &GaugeSpec, p: &PhasePoint, d: &PointData) -> (f64, f64) {
        match gauge {
            GaugeSpec::Zero => (0.0, 0.0),
            GaugeSpec::ScaledVLambda(c) => (c * d.jet.v_lambda, c * d.jet.f_v_lambda),
            GaugeSpec::Custom(q) => {
                let s = q.series_jet(p.x, p.y, p.theta);
                let fr = &d.frame.x;
                let xq = fr[0] * s.x + fr[1] * s.y + fr[2] * s.t;
                (s.v, xq + d.jet.lambda * s.t)
            }
        }
    }

    /// `(p, F(p))` at a state.
    pub fn gauge_eval(&self, gauge: &GaugeSpec, p: &PhasePoint) -> (f64, f64) {
        let d = self.point_data(p);
        self.gauge_with(gauge, p, &d)
    }

    fn kappa_with(d: &PointData, gp: f64, fgp: f64) -> f64 {
        let j = &d.jet;
        d.k_g - j.h_lambda + j.lambda * j.lambda + fgp + gp * (gp - j.v_lambda)
    }

    pub fn kappa_p(&self, gauge: &GaugeSpec, p: &PhasePoint) -> f64 {
        let d = self.point_data(p);
        let (gp, fgp) = self.gauge_with(gauge, p, &d);
        Self::kappa_with(&d, gp, fgp)
    }

    /// Thermostat curvature `K_g − H(λ) + λ² + F(V(λ))`.
    pub fn big_k(&self, p: &PhasePoint) -> f64 {
        self.kappa_p(&GaugeSpec::thermostat(), p)
    }

    /// Damped thermostat curvature `K_g − H(λ) + λ² + F(V(λ))/2 − V(λ)²/4`.
    pub fn kappa_tilde(&self, p: &PhasePoint) -> f64 {
        self.kappa_p(&GaugeSpec::damped(), p)
    }

    /// `κ_p` for a gauge given by its value `p` and flow derivative `F(p)` at the state.
    pub fn kappa_from_values(&self, p: &PhasePoint, gauge_value: f64, flow_derivative: f64) -> f64 {
        Self::kappa_with(&self.point_data(p), gauge_value, flow_derivative)
    }

    pub fn curvatures(&self, gauge: &GaugeSpec, p: &PhasePoint) -> GaugeCurvatures {
        let d = self.point_data(p);
        let (gp, fgp) = self.gauge_with(gauge, p, &d);
        let j = &d.jet;
        GaugeCurvatures {
            kappa_p: Self::kappa_with(&d, gp, fgp),
            big_k: Self::kappa_with(&d, j.v_lambda, j.f_v_lambda),
            kappa_tilde: Self::kappa_with(&d, 0.5 * j.v_lambda, 0.5 * j.f_v_lambda),
        }
    }

    /// Coefficients of the lifted dynamics at `p` in the given gauge.
    pub fn coefficients(&self, gauge: &GaugeSpec, p: &PhasePoint) -> StateCoefficients {
        let d = self.point_data(p);
        let (gp, fgp) = self.gauge_with(gauge, p, &d);
        let j = &d.jet;
        StateCoefficients {
            lambda: j.lambda,
            v_lambda: j.v_lambda,
            p: gp,
            kappa_p: Self::kappa_with(&d, gp, fgp),
            kappa_tilde: Self::kappa_with(&d, 0.5 * j.v_lambda, 0.5 * j.f_v_lambda),
        }
    }

    /// Chart components of the generator `F = X + λV`.
    pub fn generator(&self, p: &PhasePoint) -> [f64; 3] {
        let fj = self.surface.exponent_jet(p.x, p.y);
        let fr = frame_from_jet(&fj, p.theta);
        let lambda = self.intensity.eval(p.x, p.y, p.theta);
        [fr.x[0], fr.x[1], fr.x[2] + lambda]
    }

    /// Generator plus `V(λ)`, the integrand of the damping quadrature.
    pub(crate) fn generator_with_divergence(&self, x: f64, y: f64, theta: f64) -> [f64; 4] {
        let fj = self.surface.exponent_jet(x, y);
        let fr = frame_from_jet(&fj, theta);
        let s = self.intensity.series_jet(x, y, theta);
        [fr.x[0], fr.x[1], fr.x[2] + s.v, s.t]
    }
}
