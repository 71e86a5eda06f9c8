//! Flat JSON scenario configuration in SI units, presets and nondimensionalization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::{ScenarioConfig, Variant};
use crate::error::{GelError, Result};
use crate::material::{MaterialParams, DEFAULT_N1, DEFAULT_N2};

/// Raw configuration as written by the user. Every field is optional; a
/// `preset` pre-populates fields that explicit keys then override.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Elastic modulus μ_E [Pa].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_e: Option<f64>,
    /// Flory–Huggins energy scale [Pa].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fh_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_i: Option<f64>,
    /// Polymer shear viscosity η₁ [Pa·s].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    /// Drag coefficient β [Pa·s/m²].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Boundary pressure P₀ [Pa].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    /// Domain edge length [m].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// Nondimensional time step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0_override: Option<f64>,
    /// Snapshot cadence in steps; 0 writes the final state only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

pub const PRESETS: [&str; 2] = ["fig1", "fig2"];

pub fn preset(name: &str) -> Result<RawConfig> {
    let base = RawConfig { preset: Some(name.to_string()), ..RawConfig::default() };
    match name {
        "fig1" => Ok(RawConfig {
            variant: Some("inviscid-permeable".into()),
            s: Some(3.0),
            q: Some(1.5),
            r: Some(4.0),
            fh_scale: Some(1e5),
            ..base
        }),
        "fig2" => Ok(RawConfig {
            variant: Some("inviscid-permeable".into()),
            s: Some(1.0),
            q: Some(1.5),
            r: Some(1.1),
            fh_scale: Some(1e7),
            ..base
        }),
        other => Err(GelError::Config(format!("preset: unknown preset `{other}` (expected fig1 or fig2)"))),
    }
}

impl RawConfig {
    /// Fields set in `over` replace those in `self`.
    pub fn overlay(&self, over: &RawConfig) -> Result<RawConfig> {
        let mut a = to_map(self)?;
        for (k, v) in to_map(over)? {
            a.insert(k, v);
        }
        serde_json::from_value(Value::Object(a)).map_err(|e| GelError::Config(e.to_string()))
    }

    /// Applies a preset named in the file, then the file's own keys.
    pub fn with_preset(&self) -> Result<RawConfig> {
        match &self.preset {
            Some(p) => preset(p)?.overlay(self),
            None => Ok(self.clone()),
        }
    }

    /// Sets one key from its JSON value, as used by parameter sweeps.
    pub fn set_key(&self, key: &str, value: Value) -> Result<RawConfig> {
        let mut a = to_map(self)?;
        a.insert(key.to_string(), value);
        serde_json::from_value(Value::Object(a)).map_err(|e| GelError::Config(format!("{key}: {e}")))
    }
}

fn to_map(c: &RawConfig) -> Result<Map<String, Value>> {
    match serde_json::to_value(c).map_err(|e| GelError::Config(e.to_string()))? {
        Value::Object(m) => Ok(m),
        _ => Err(GelError::Config("configuration must be a JSON object".into())),
    }
}

pub fn parse_config_str(text: &str) -> Result<RawConfig> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    serde_json::from_str::<RawConfig>(text)
        .map_err(|e| GelError::Config(format!("line {} column {}: {e}", e.line(), e.column())))?
        .with_preset()
}

pub fn parse_config(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| GelError::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        GelError::Config(m) => GelError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Scale factors: stress by μ_E, mixing energy by fh_scale, time by η₁/μ_E,
/// length by the domain edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub stress: f64,
    pub mixing: f64,
    pub time: f64,
    pub length: f64,
}

/// SI inputs with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiInputs {
    pub preset: Option<String>,
    pub variant: Variant,
    pub mu_e: f64,
    pub fh_scale: f64,
    pub chi: f64,
    pub n1: f64,
    pub n2: f64,
    pub a1: f64,
    pub a3: f64,
    pub alpha: f64,
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub phi_i: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub p0: f64,
    pub length: f64,
    pub level: u32,
    pub dt: f64,
    pub n_steps: usize,
    pub f0_override: Option<f64>,
    pub snapshot_every: usize,
}

/// A validated scenario: SI echo, scales and the nondimensional problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub si: SiInputs,
    pub scales: Scales,
    pub scenario: ScenarioConfig,
}

impl RawConfig {
    pub fn resolve(&self) -> Result<RunConfig> {
        let c = self.with_preset()?;
        let variant = match &c.variant {
            None => return Err(GelError::Config("variant: required (one of inviscid-impermeable, inviscid-permeable, viscous-impermeable, viscous-permeable)".into())),
            Some(v) => Variant::parse(v).ok_or_else(|| GelError::Config(format!("variant: unknown value `{v}`")))?,
        };
        let mu_e = c.mu_e.unwrap_or(1e9);
        let eta1 = c.eta1.unwrap_or(1e8);
        let length = c.length.unwrap_or(0.01);
        let si = SiInputs {
            preset: c.preset.clone(),
            variant,
            mu_e,
            fh_scale: c.fh_scale.unwrap_or(1e5),
            chi: c.chi.unwrap_or(0.5),
            n1: c.n1.unwrap_or(DEFAULT_N1),
            n2: c.n2.unwrap_or(DEFAULT_N2),
            a1: c.a1.unwrap_or(1.0),
            a3: c.a3.unwrap_or(1.0),
            alpha: c.alpha.unwrap_or(1.0),
            s: c.s.unwrap_or(1.0),
            q: c.q.unwrap_or(1.0),
            r: c.r.unwrap_or(1.0),
            phi_i: c.phi_i.unwrap_or(0.5),
            eta1,
            eta2: c.eta2.unwrap_or(0.1 * eta1),
            mu1: c.mu1.unwrap_or(eta1),
            mu2: c.mu2.unwrap_or(0.1 * eta1),
            beta: c.beta.unwrap_or(eta1 / (length * length)),
            p0: c.p0.unwrap_or(1e4),
            length,
            level: c.level.unwrap_or(5),
            dt: c.dt.unwrap_or(0.01),
            n_steps: c.n_steps.unwrap_or(100),
            f0_override: c.f0_override,
            snapshot_every: c.snapshot_every.unwrap_or(0),
        };
        si.validate()?;
        let scales = Scales { stress: si.mu_e, mixing: si.fh_scale, time: si.eta1 / si.mu_e, length: si.length };
        let mut params = MaterialParams {
            fh_scale: si.fh_scale / si.mu_e,
            mu_e: 1.0,
            a1: si.a1,
            a3: si.a3,
            alpha: si.alpha,
            s: si.s,
            q_exp: si.q,
            r: si.r,
            phi_i: si.phi_i,
            eta1: 1.0,
            eta2: si.eta2 / si.eta1,
            mu1: si.mu1 / si.eta1,
            mu2: si.mu2 / si.eta1,
            beta_drag: si.beta * si.length * si.length / si.eta1,
            ..MaterialParams::default()
        };
        params.set_flory(si.chi, si.n1, si.n2);
        params.validate().map_err(|e| GelError::Config(e.to_string()))?;
        let scenario = ScenarioConfig {
            variant,
            params,
            level: si.level,
            dt: si.dt,
            n_steps: si.n_steps,
            p0: si.p0 / si.mu_e,
            f0_override: si.f0_override,
        };
        Ok(RunConfig { si, scales, scenario })
    }
}

impl SiInputs {
    fn validate(&self) -> Result<()> {
        let fail = |key: &str, why: &str| Err(GelError::Config(format!("{key}: {why}")));
        if !(self.mu_e > 0.0 && self.mu_e.is_finite()) {
            return fail("mu_e", "must be positive");
        }
        if !(self.eta1 > 0.0 && self.eta1.is_finite()) {
            return fail("eta1", "must be positive");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return fail("length", "must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt", "must be positive");
        }
        if self.n_steps < 1 {
            return fail("n_steps", "must be at least 1");
        }
        if !(1..=10).contains(&self.level) {
            return fail("level", "must lie in 1..=10");
        }
        if !(self.n1 > 0.0 && self.n2 > 0.0) {
            return fail("n1", "chain lengths must be positive");
        }
        if !self.p0.is_finite() {
            return fail("p0", "must be finite");
        }
        if let Some(f) = self.f0_override {
            if !(f > 0.0 && f.is_finite()) {
                return fail("f0_override", "must be positive");
            }
        }
        Ok(())
    }
}
