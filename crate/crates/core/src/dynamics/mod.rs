//! Backward-Euler time stepping of the four linearized gel systems.

mod energy;
mod forcing;
mod system;

use serde::{Deserialize, Serialize};

pub use energy::{energy, energy_residual, EnergyRecord};
pub use forcing::{build_extensions, Extensions, Forcing, ForcingTerms, Loads};
pub use system::{initial_state, Operators, Stepper};

use crate::material::MaterialParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    InviscidImpermeable,
    InviscidPermeable,
    ViscousImpermeable,
    ViscousPermeable,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::InviscidImpermeable,
        Variant::InviscidPermeable,
        Variant::ViscousImpermeable,
        Variant::ViscousPermeable,
    ];

    pub fn is_viscous(self) -> bool {
        matches!(self, Variant::ViscousImpermeable | Variant::ViscousPermeable)
    }

    pub fn is_permeable(self) -> bool {
        matches!(self, Variant::InviscidPermeable | Variant::ViscousPermeable)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::InviscidImpermeable => "inviscid-impermeable",
            Variant::InviscidPermeable => "inviscid-permeable",
            Variant::ViscousImpermeable => "viscous-impermeable",
            Variant::ViscousPermeable => "viscous-permeable",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// A nondimensional scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub variant: Variant,
    pub params: MaterialParams,
    pub level: u32,
    pub dt: f64,
    pub n_steps: usize,
    /// Boundary pressure on Γ in units of μ_E.
    pub p0: f64,
    /// Stretch used for the initial-displacement amplitude instead of f₀.
    pub f0_override: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(variant: Variant, params: MaterialParams) -> Self {
        ScenarioConfig { variant, params, level: 5, dt: 0.01, n_steps: 100, p0: 1e-5, f0_override: None }
    }
}

/// Nodal fields at one time level. `p` is the pressure perturbation solved
/// for; the total pressure adds the boundary extension P.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub v2: Option<Vec<f64>>,
}

impl SimState {
    pub fn max_abs(&self) -> f64 {
        let v2 = self.v2.as_deref().unwrap_or(&[]);
        self.u.iter().chain(&self.q).chain(&self.p).chain(v2).fold(0.0f64, |m, x| m.max(x.abs()))
    }
}
