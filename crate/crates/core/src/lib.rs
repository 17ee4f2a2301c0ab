//! Numerical laboratory for thermostat flows on the 2-torus.
//!
//! A thermostat is a surface `(M, g)` together with an intensity
//! `λ: SM → ℝ`; its trajectories solve `∇_γ̇ γ̇ = λ(γ, γ̇) J γ̇`. This crate
//! restricts to conformally flat metrics `g = e^{2f}(dx² + dy²)` on
//! `[0, 2π)²` and to intensities that are finite Fourier sums in the fiber
//! angle, so every derivative entering the curvature gauges is exact.
//!
//! Layout:
//! - [`geometry`]: Fourier fields, the conformal torus, the moving frame `{X, H, V}`.
//! - [`model`]: intensities, gauges `p` and the curvatures `κ_p`, `𝕂`, `κ̃`.
//! - [`flow`]: the flow `φ_t` on `SM` with dense output and the exponential map.
//! - [`cocycle`]: lifted dynamics on the characteristic set `Σ`.
//! - [`analysis`]: conjugate points, Green bundles, Lyapunov exponents, domination.
//! - [`global`]: Liouville quadrature and the total-curvature integrals.

// NaN must fail positivity checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cocycle;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod global;
pub mod model;
pub mod ode;

pub use error::{Error, Result};
pub use geometry::{Basis2, ConformalTorus, FourierField2, FrameVectors, PhasePoint};
pub use model::{GaugeSpec, IntensityModel, Thermostat};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub(crate) const TAU: f64 = std::f64::consts::TAU;
