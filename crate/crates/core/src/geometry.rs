//! Conformally flat metrics on the torus and the moving frame of `SM`.

use crate::TAU;

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference `a − b` reduced to `(−π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Tensor-product basis functions on the torus: `cos(jx)cos(ky)`,
/// `cos(jx)sin(ky)`, `sin(jx)cos(ky)` and `sin(jx)sin(ky)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis2 {
    CosCos,
    CosSin,
    SinCos,
    SinSin,
}

impl Basis2 {
    pub const ALL: [Basis2; 4] = [Basis2::CosCos, Basis2::CosSin, Basis2::SinCos, Basis2::SinSin];

    pub fn tag(self) -> &'static str {
        match self {
            Basis2::CosCos => "cc",
            Basis2::CosSin => "cs",
            Basis2::SinCos => "sc",
            Basis2::SinSin => "ss",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Basis2::ALL.into_iter().find(|b| b.tag() == tag)
    }

    fn factors(self) -> (bool, bool) {
        match self {
            Basis2::CosCos => (true, true),
            Basis2::CosSin => (true, false),
            Basis2::SinCos => (false, true),
            Basis2::SinSin => (false, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub j: u32,
    pub k: u32,
    pub basis: Basis2,
    pub coeff: f64,
}

/// Value and partial derivatives of a field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Jet2 {
    fn add_scaled(&mut self, c: f64, o: &Jet2) {
        self.v += c * o.v;
        self.x += c * o.x;
        self.y += c * o.y;
        self.xx += c * o.xx;
        self.yy += c * o.yy;
        self.xy += c * o.xy;
    }
}

/// (value, first, second derivative) of `cos(n t)` or `sin(n t)`.
#[inline]
fn trig_factor(cosine: bool, n: u32, t: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    let (s, c) = (nf * t).sin_cos();
    if cosine {
        (c, -nf * s, -nf * nf * c)
    } else {
        (s, nf * c, -nf * nf * s)
    }
}

/// Real trigonometric polynomial on `[0, 2π)²` with exact partial derivatives.
///
/// Coefficients are stored sparsely; repeated `(j, k, basis)` entries are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FourierField2 {
    terms: Vec<FourierTerm>,
}

impl FourierField2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([(0, 0, Basis2::CosCos, c)])
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, Basis2, f64)>,
    {
        let mut out: Vec<FourierTerm> = Vec::new();
        for (j, k, basis, coeff) in terms {
            if let Some(t) = out.iter_mut().find(|t| t.j == j && t.k == k && t.basis == basis) {
                t.coeff += coeff;
            } else {
                out.push(FourierTerm { j, k, basis, coeff });
            }
        }
        // sin(0·x) vanishes identically
        out.retain(|t| {
            let (cx, cy) = t.basis.factors();
            t.coeff != 0.0 && (cx || t.j != 0) && (cy || t.k != 0)
        });
        out.sort_by_key(|t| (t.j, t.k, t.basis));
        Self { terms: out }
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest frequency appearing along either axis.
    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.j.max(t.k)).max().unwrap_or(0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| (t.j, t.k, t.basis, c * t.coeff)))
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet2 {
        let mut out = Jet2::default();
        for t in &self.terms {
            let (cx, cy) = t.basis.factors();
            let (a, a1, a2) = trig_factor(cx, t.j, x);
            let (b, b1, b2) = trig_factor(cy, t.k, y);
            let term = Jet2 {
                v: a * b,
                x: a1 * b,
                y: a * b1,
                xx: a2 * b,
                yy: a * b2,
                xy: a1 * b1,
            };
            out.add_scaled(t.coeff, &term);
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).v
    }
}

/// Metric `g = e^{2f}(dx² + dy²)` on the torus with periods `2π`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConformalTorus {
    pub f: FourierField2,
}

impl ConformalTorus {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn new(f: FourierField2) -> Self {
        Self { f }
    }

    pub fn is_flat(&self) -> bool {
        self.f.is_zero()
    }

    /// Jet of the conformal exponent `f`.
    #[inline]
    pub fn exponent_jet(&self, x: f64, y: f64) -> Jet2 {
        if self.f.is_zero() {
            Jet2::default()
        } else {
            self.f.jet(x, y)
        }
    }

    /// Area density `e^{2f}` of the metric in the chart.
    pub fn area_density(&self, x: f64, y: f64) -> f64 {
        if self.f.is_zero() {
            1.0
        } else {
            (2.0 * self.f.eval(x, y)).exp()
        }
    }

    pub fn gaussian_curvature(&self, x: f64, y: f64) -> f64 {
        if self.f.is_zero() {
            return 0.0;
        }
        let j = self.f.jet(x, y);
        -(-2.0 * j.v).exp() * (j.xx + j.yy)
    }

    /// Chart components of `X`, `H`, `V` at `p`.
    pub fn frame_at(&self, p: &PhasePoint) -> FrameVectors {
        frame_from_jet(&self.exponent_jet(p.x, p.y), p.theta)
    }
}

pub fn gaussian_curvature(surface: &ConformalTorus, x: f64, y: f64) -> f64 {
    surface.gaussian_curvature(x, y)
}

pub fn frame_at(surface: &ConformalTorus, p: &PhasePoint) -> FrameVectors {
    surface.frame_at(p)
}

#[inline]
pub(crate) fn frame_from_jet(fj: &Jet2, theta: f64) -> FrameVectors {
    let (s, c) = theta.sin_cos();
    let ef = (-fj.v).exp();
    FrameVectors {
        x: [ef * c, ef * s, ef * (-fj.x * s + fj.y * c)],
        h: [-ef * s, ef * c, -ef * (fj.x * c + fj.y * s)],
        v: [0.0, 0.0, 1.0],
    }
}

/// A unit tangent vector: base point `(x, y)` and fiber angle `θ` measured
/// against the orthonormal frame `e^{−f}∂x, e^{−f}∂y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl PhasePoint {
    /// Builds a point with all coordinates reduced to `[0, 2π)`.
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x: wrap_angle(x),
            y: wrap_angle(y),
            theta: wrap_angle(theta),
        }
    }

    pub(crate) fn unwrapped(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn normalized(&self) -> Self {
        Self::new(self.x, self.y, self.theta)
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }

    /// `(x, −v)`.
    pub fn flipped(&self) -> Self {
        Self::new(self.x, self.y, self.theta + std::f64::consts::PI)
    }

    /// Max-norm distance on the 3-torus of chart coordinates.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        angle_diff(self.x, other.x)
            .abs()
            .max(angle_diff(self.y, other.y).abs())
            .max(angle_diff(self.theta, other.theta).abs())
    }
}

/// Chart components over `(∂x, ∂y, ∂θ)` of the frame `{X, H, V}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVectors {
    pub x: [f64; 3],
    pub h: [f64; 3],
    pub v: [f64; 3],
}

/// Finite-difference stencil used for numerical brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(u(p+h) − u(p−h)) / 2h`, error `O(h²)`.
    Central2,
    /// Five-point central difference, error `O(h⁴)`.
    Central4,
}

fn directional_derivative<F>(field: &F, p: [f64; 3], axis: usize, h: f64, stencil: Stencil) -> [f64; 3]
where
    F: Fn([f64; 3]) -> [f64; 3],
{
    let shift = |d: f64| {
        let mut q = p;
        q[axis] += d;
        field(q)
    };
    let mut out = [0.0; 3];
    match stencil {
        Stencil::Central2 => {
            let (a, b) = (shift(h), shift(-h));
            for i in 0..3 {
                out[i] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        Stencil::Central4 => {
            let (a2, a1, b1, b2) = (shift(2.0 * h), shift(h), shift(-h), shift(-2.0 * h));
            for i in 0..3 {
                out[i] = (-a2[i] + 8.0 * a1[i] - 8.0 * b1[i] + b2[i]) / (12.0 * h);
            }
        }
    }
    out
}

/// Lie bracket `[A, B]` of two chart vector fields by finite differences.
fn bracket<A, B>(a: &A, b: &B, p: [f64; 3], h: f64, stencil: Stencil) -> [f64; 3]
where
    A: Fn([f64; 3]) -> [f64; 3],
    B: Fn([f64; 3]) -> [f64; 3],
{
    let av = a(p);
    let bv = b(p);
    let mut out = [0.0; 3];
    for j in 0..3 {
        let db = directional_derivative(b, p, j, h, stencil);
        let da = directional_derivative(a, p, j, h, stencil);
        for i in 0..3 {
            out[i] += av[j] * db[i] - bv[j] * da[i];
        }
    }
    out
}

/// Max-norm residuals of `[V,X] − H`, `[V,H] + X` and `[X,H] − K_g V`,
/// with brackets from the five-point central stencil.
pub fn commutator_residual(surface: &ConformalTorus, p: &PhasePoint, h: f64) -> [f64; 3] {
    commutator_residual_with(surface, p, h, Stencil::Central4)
}

pub fn commutator_residual_with(
    surface: &ConformalTorus,
    p: &PhasePoint,
    h: f64,
    stencil: Stencil,
) -> [f64; 3] {
    assert!(h > 0.0, "finite-difference step must be positive");
    let fx = |q: [f64; 3]| surface.frame_at(&PhasePoint::unwrapped(q[0], q[1], q[2])).x;
    let fh = |q: [f64; 3]| surface.frame_at(&PhasePoint::unwrapped(q[0], q[1], q[2])).h;
    let fv = |_q: [f64; 3]| [0.0, 0.0, 1.0];
    let q = p.coords();
    let frame = surface.frame_at(p);
    let k = surface.gaussian_curvature(p.x, p.y);

    let vx = bracket(&fv, &fx, q, h, stencil);
    let vh = bracket(&fv, &fh, q, h, stencil);
    let xh = bracket(&fx, &fh, q, h, stencil);
    let max_abs = |r: [f64; 3]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    [
        max_abs([vx[0] - frame.h[0], vx[1] - frame.h[1], vx[2] - frame.h[2]]),
        max_abs([vh[0] + frame.x[0], vh[1] + frame.x[1], vh[2] + frame.x[2]]),
        max_abs([xh[0], xh[1], xh[2] - k]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn bumpy() -> ConformalTorus {
        ConformalTorus::new(FourierField2::from_terms([(1, 1, Basis2::CosCos, 0.1)]))
    }

    #[test]
    fn flat_curvature_is_exactly_zero() {
        let s = ConformalTorus::flat();
        assert_eq!(s.gaussian_curvature(1.3, 4.2), 0.0);
    }

    #[test]
    fn single_mode_curvature_at_origin() {
        let k = bumpy().gaussian_curvature(0.0, 0.0);
        let expected = -(-0.2f64).exp() * (-0.2);
        assert!((k - expected).abs() < 1e-15);
    }

    #[test]
    fn curvature_matches_second_difference_oracle() {
        let s = ConformalTorus::new(FourierField2::from_terms([
            (1, 1, Basis2::CosCos, 0.1),
            (2, 0, Basis2::SinCos, -0.05),
            (0, 3, Basis2::CosSin, 0.02),
        ]));
        let h = 1e-4;
        for i in 0..10 {
            let (x, y) = (0.37 * i as f64, 1.1 + 0.53 * i as f64);
            let f = |x: f64, y: f64| s.f.eval(x, y);
            let lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
            let oracle = -(-2.0 * f(x, y)).exp() * lap;
            assert!((s.gaussian_curvature(x, y) - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn flat_frames() {
        let s = ConformalTorus::flat();
        let f0 = s.frame_at(&PhasePoint::new(0.4, 0.2, 0.0));
        assert_eq!(f0.x, [1.0, 0.0, 0.0]);
        assert_eq!(f0.h, [-0.0, 1.0, -0.0]);
        assert_eq!(f0.v, [0.0, 0.0, 1.0]);
        let f1 = s.frame_at(&PhasePoint::new(0.4, 0.2, FRAC_PI_2));
        assert!((f1.x[0]).abs() < 1e-16 && (f1.x[1] - 1.0).abs() < 1e-16);
        assert!((f1.h[0] + 1.0).abs() < 1e-16 && f1.h[1].abs() < 1e-16);
    }

    #[test]
    fn partials_match_central_differences() {
        let f = FourierField2::from_terms([
            (3, 2, Basis2::CosCos, 0.7),
            (8, 1, Basis2::SinSin, -0.4),
            (0, 8, Basis2::CosSin, 1.0),
            (5, 0, Basis2::SinCos, 0.9),
        ]);
        let h = 1e-4;
        for i in 0..20 {
            let (x, y) = (0.31 * i as f64, 6.0 - 0.29 * i as f64);
            let j = f.jet(x, y);
            let dx = (f.eval(x + h, y) - f.eval(x - h, y)) / (2.0 * h);
            let dy = (f.eval(x, y + h) - f.eval(x, y - h)) / (2.0 * h);
            let jxp = f.jet(x + h, y);
            let jxm = f.jet(x - h, y);
            let jyp = f.jet(x, y + h);
            let jym = f.jet(x, y - h);
            assert!((j.x - dx).abs() < 1e-6 * 64.0);
            assert!((j.y - dy).abs() < 1e-6 * 64.0);
            assert!((j.xx - (jxp.x - jxm.x) / (2.0 * h)).abs() < 1e-6 * 512.0);
            assert!((j.yy - (jyp.y - jym.y) / (2.0 * h)).abs() < 1e-6 * 512.0);
        }
    }

    #[test]
    fn periodicity() {
        let f = FourierField2::from_terms([(2, 3, Basis2::SinCos, 0.3), (1, 0, Basis2::CosCos, 1.0)]);
        for i in 0..10 {
            let (x, y) = (0.7 * i as f64, 0.2 * i as f64);
            assert!((f.eval(x, y) - f.eval(x + TAU, y - TAU)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_sine_terms_dropped() {
        let f = FourierField2::from_terms([(0, 2, Basis2::SinCos, 1.0), (1, 1, Basis2::CosCos, 0.0)]);
        assert!(f.is_zero());
    }

    #[test]
    fn flat_commutators_are_tight() {
        let s = ConformalTorus::flat();
        for i in 0..16 {
            let p = PhasePoint::new(0.3 * i as f64, 0.1, 0.41 * i as f64);
            let r = commutator_residual(&s, &p, 1e-4);
            assert!(r.iter().all(|&v| v < 1e-10), "{r:?}");
        }
    }

    #[test]
    fn second_order_stencil_converges_quadratically() {
        let s = bumpy();
        let p = PhasePoint::new(0.7, 2.1, 1.3);
        let r1 = commutator_residual_with(&s, &p, 1e-2, Stencil::Central2);
        let r2 = commutator_residual_with(&s, &p, 5e-3, Stencil::Central2);
        for i in 0..3 {
            let ratio = r1[i] / r2[i];
            assert!((ratio - 4.0).abs() < 0.2, "component {i}: ratio {ratio}");
        }
    }
}
