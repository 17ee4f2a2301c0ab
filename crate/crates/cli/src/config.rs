//! Experiment configuration.
//!
//! Configs are TOML documents with the sections `surface`, `intensity`,
//! `gauge`, `integrator`, `orbit` and `scan`. Every section and key is
//! optional and falls back to the defaults below; unknown keys are rejected.
//! A JSON summary written by any subcommand embeds the resolved config under
//! `"config"` and is accepted as a config file too.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use thermolab::analysis::{DEFAULT_GREEN_TOL, FLOW_FD_STEP};
use thermolab::cocycle::{RENORM_INTERVAL, RICCATI_CAP};
use thermolab::geometry::{Basis2, ConformalTorus, FourierField2, PhasePoint};
use thermolab::model::{GaugeSpec, IntensityModel, Thermostat};
use thermolab::ode::Tolerances;

use crate::error::CliError;

pub const BUNDLED_S1: &str = include_str!("../configs/s1.toml");
pub const BUNDLED_S2: &str = include_str!("../configs/s2.toml");
pub const BUNDLED_S3: &str = include_str!("../configs/s3.toml");

/// One tensor-product Fourier term `coeff · b(jx, ky)`; `basis` is one of
/// `cc`, `cs`, `sc`, `ss`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub j: u32,
    pub k: u32,
    pub basis: String,
    pub coeff: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    /// Terms of the conformal exponent `f`.
    pub terms: Vec<TermConfig>,
}

/// Fiber mode `k`: `a_k(x, y) cos kθ + b_k(x, y) sin kθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: usize,
    #[serde(default)]
    pub a: Vec<TermConfig>,
    #[serde(default)]
    pub b: Vec<TermConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntensitySection {
    /// Largest fiber mode allowed in `modes`.
    pub theta_degree: usize,
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Zero,
    ScaledVLambda,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeSection {
    pub kind: GaugeKind,
    /// Factor `c` in `p = c·V(λ)`.
    pub factor: f64,
    /// Modes of `p` for `kind = "custom"`.
    pub custom: Vec<ModeConfig>,
}

impl Default for GaugeSection {
    fn default() -> Self {
        Self {
            kind: GaugeKind::ScaledVLambda,
            factor: 0.5,
            custom: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            rel_tol: t.rel_tol,
            abs_tol: t.abs_tol,
            max_step: t.max_step,
            max_steps: t.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSection {
    /// Initial state `(x, y, θ)`.
    pub initial: [f64; 3],
    pub t_min: f64,
    pub t_max: f64,
    /// Output sampling interval.
    pub dt: f64,
    /// Initial covector `(x_c, y_c)` for the `cocycle` subcommand.
    pub covector: [f64; 2],
}

impl Default for OrbitSection {
    fn default() -> Self {
        Self {
            initial: [0.3, 0.7, 1.1],
            t_min: 0.0,
            t_max: 10.0,
            dt: 0.1,
            covector: [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Grid sizes `(n_x, n_y, n_θ)` for curvature, Green and κ_w scans.
    pub grid: [usize; 3],
    /// Grid for the Liouville quadrature of the `hopf` subcommand.
    pub hopf_grid: [usize; 3],
    /// Horizon of conjugate scans and Lyapunov exponents.
    pub t_max: f64,
    /// Domination horizon `T` (integer number of unit steps).
    pub horizon: usize,
    /// Increasing `t₀` schedule for Green-slope extrapolation.
    pub schedule: Vec<f64>,
    pub green_tol: f64,
    pub conjugate_tol: f64,
    /// Number of seeded random anchors.
    pub samples: usize,
    pub seed: u64,
    /// Step of flow-direction finite differences.
    pub fd_step: f64,
    /// Renormalization interval of Lyapunov estimates.
    pub renorm: f64,
    pub riccati_cap: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            grid: [8, 8, 8],
            hopf_grid: [16, 16, 32],
            t_max: 40.0,
            horizon: 20,
            schedule: thermolab::analysis::DEFAULT_SCHEDULE.to_vec(),
            green_tol: DEFAULT_GREEN_TOL,
            conjugate_tol: 1e-9,
            samples: 20,
            seed: 1,
            fd_step: FLOW_FD_STEP,
            renorm: RENORM_INTERVAL,
            riccati_cap: RICCATI_CAP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub surface: SurfaceSection,
    pub intensity: IntensitySection,
    pub gauge: GaugeSection,
    pub integrator: IntegratorSection,
    pub orbit: OrbitSection,
    pub scan: ScanSection,
}

#[derive(Deserialize)]
struct Summary {
    config: ExperimentConfig,
}

fn invalid(field: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {msg}", field.into()))
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn field_from_terms(path: &str, terms: &[TermConfig]) -> Result<FourierField2, CliError> {
    let mut out = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let basis = Basis2::from_tag(&t.basis)
            .ok_or_else(|| invalid(format!("{path}[{i}].basis"), format!("unknown basis '{}', expected cc, cs, sc or ss", t.basis)))?;
        finite(&format!("{path}[{i}].coeff"), t.coeff)?;
        out.push((t.j, t.k, basis, t.coeff));
    }
    Ok(FourierField2::from_terms(out))
}

fn intensity_from_modes(path: &str, modes: &[ModeConfig], max_k: Option<usize>) -> Result<IntensityModel, CliError> {
    let mut model = IntensityModel::zero();
    for (i, m) in modes.iter().enumerate() {
        if let Some(max) = max_k {
            if m.k > max {
                return Err(invalid(format!("{path}[{i}].k"), format!("mode {} exceeds intensity.theta_degree = {max}", m.k)));
            }
        }
        if m.k == 0 && !m.b.is_empty() {
            return Err(invalid(format!("{path}[{i}].b"), "mode 0 has no sine part"));
        }
        let a = field_from_terms(&format!("{path}[{i}].a"), &m.a)?;
        let b = field_from_terms(&format!("{path}[{i}].b"), &m.b)?;
        let add = IntensityModel::zero().with_mode(m.k, a, b);
        model = model.plus(&add);
    }
    Ok(model)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.to_string().trim_end())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file; `.json` files may be bare configs or summaries.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("config: cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
            let cfg = if value.get("config").is_some() {
                serde_json::from_value::<Summary>(value).map(|s| s.config)
            } else {
                serde_json::from_value::<Self>(value)
            }
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn bundled() -> [(&'static str, Self); 3] {
        [("s1", BUNDLED_S1), ("s2", BUNDLED_S2), ("s3", BUNDLED_S3)]
            .map(|(n, t)| (n, Self::from_toml_str(t).expect("bundled configs are valid")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let i = &self.integrator;
        positive("integrator.rel_tol", i.rel_tol)?;
        positive("integrator.abs_tol", i.abs_tol)?;
        positive("integrator.max_step", i.max_step)?;
        if i.max_steps == 0 {
            return Err(invalid("integrator.max_steps", "must be at least 1"));
        }
        self.surface()?;
        self.intensity()?;
        self.gauge_spec()?;
        let o = &self.orbit;
        for (k, v) in o.initial.iter().enumerate() {
            finite(&format!("orbit.initial[{k}]"), *v)?;
        }
        finite("orbit.t_min", o.t_min)?;
        finite("orbit.t_max", o.t_max)?;
        if o.t_min > 0.0 || o.t_max < 0.0 || o.t_min == o.t_max {
            return Err(invalid("orbit.t_max", format!("span [{}, {}] must contain 0 and be nondegenerate", o.t_min, o.t_max)));
        }
        positive("orbit.dt", o.dt)?;
        for (k, v) in o.covector.iter().enumerate() {
            finite(&format!("orbit.covector[{k}]"), *v)?;
        }
        let s = &self.scan;
        for (name, g) in [("scan.grid", s.grid), ("scan.hopf_grid", s.hopf_grid)] {
            if g.contains(&0) {
                return Err(invalid(name, "all sizes must be at least 1"));
            }
        }
        positive("scan.t_max", s.t_max)?;
        if s.horizon == 0 {
            return Err(invalid("scan.horizon", "must be at least 1"));
        }
        if s.schedule.is_empty() {
            return Err(invalid("scan.schedule", "must not be empty"));
        }
        for (k, t) in s.schedule.iter().enumerate() {
            positive(&format!("scan.schedule[{k}]"), *t)?;
        }
        if s.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("scan.schedule", "must be strictly increasing"));
        }
        positive("scan.green_tol", s.green_tol)?;
        positive("scan.conjugate_tol", s.conjugate_tol)?;
        positive("scan.fd_step", s.fd_step)?;
        positive("scan.renorm", s.renorm)?;
        positive("scan.riccati_cap", s.riccati_cap)?;
        Ok(())
    }

    pub fn surface(&self) -> Result<ConformalTorus, CliError> {
        Ok(ConformalTorus::new(field_from_terms("surface.terms", &self.surface.terms)?))
    }

    pub fn intensity(&self) -> Result<IntensityModel, CliError> {
        intensity_from_modes("intensity.modes", &self.intensity.modes, Some(self.intensity.theta_degree))
    }

    pub fn thermostat(&self) -> Result<Thermostat, CliError> {
        Ok(Thermostat::new(self.surface()?, self.intensity()?))
    }

    pub fn gauge_spec(&self) -> Result<GaugeSpec, CliError> {
        let g = &self.gauge;
        if g.kind != GaugeKind::Custom && !g.custom.is_empty() {
            return Err(invalid("gauge.custom", "only allowed with kind = \"custom\""));
        }
        Ok(match g.kind {
            GaugeKind::Zero => GaugeSpec::Zero,
            GaugeKind::ScaledVLambda => {
                finite("gauge.factor", g.factor)?;
                GaugeSpec::ScaledVLambda(g.factor)
            }
            GaugeKind::Custom => GaugeSpec::Custom(intensity_from_modes("gauge.custom", &g.custom, None)?),
        })
    }

    pub fn tolerances(&self) -> Tolerances {
        let i = &self.integrator;
        Tolerances {
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
            max_step: i.max_step,
            max_steps: i.max_steps,
        }
    }

    pub fn initial_point(&self) -> PhasePoint {
        let [x, y, t] = self.orbit.initial;
        PhasePoint::new(x, y, t)
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_build() {
        for (_, c) in ExperimentConfig::bundled() {
            c.thermostat().unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_toml_str("[integrator]\nrel_tol = 1e-9\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn negative_tolerance_names_the_field() {
        let e = ExperimentConfig::from_toml_str("[integrator]\nrel_tol = -1e-9\n").unwrap_err();
        assert!(e.to_string().contains("integrator.rel_tol"));
    }

    #[test]
    fn bad_basis_names_the_term() {
        let e = ExperimentConfig::from_toml_str("[[surface.terms]]\nj = 1\nk = 0\nbasis = \"xx\"\ncoeff = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("surface.terms[0].basis"), "{e}");
    }

    #[test]
    fn modes_above_theta_degree_are_rejected() {
        let text = "[intensity]\ntheta_degree = 1\n[[intensity.modes]]\nk = 2\na = [{ j = 0, k = 0, basis = \"cc\", coeff = 1.0 }]\n";
        let e = ExperimentConfig::from_toml_str(text).unwrap_err();
        assert!(e.to_string().contains("intensity.modes[0].k"), "{e}");
    }

    #[test]
    fn json_round_trip() {
        let (_, c) = ExperimentConfig::bundled()[2].clone();
        let json = serde_json::to_string(&serde_json::json!({ "config": c })).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("summary.json");
        std::fs::write(&p, json).unwrap();
        let back = ExperimentConfig::load(&p).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }
}
