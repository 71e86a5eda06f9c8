//! Discrete energy bookkeeping of a backward-Euler step.

use serde::Serialize;

use super::{Loads, SimState, Stepper};
use crate::fem::sparse::dot;

/// ρ = E(xⁿ⁺¹) − E(xⁿ) + Δt 𝒟 − Δt 𝒲. For backward Euler ρ is minus a
/// nonnegative quadratic form in the increment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub work: f64,
    pub residual: f64,
}

pub fn energy(stepper: &Stepper, s: &SimState) -> f64 {
    let ops = &stepper.ops;
    let e = 0.5 * ops.k.bilinear(&s.u, &s.u);
    if stepper.variant.is_viscous() {
        e
    } else {
        e + 0.5 * stepper.moduli.lambda_t * ops.mass_p.bilinear(&s.q, &s.q)
    }
}

pub fn energy_residual(stepper: &Stepper, step: usize, prev: &SimState, next: &SimState, loads: &Loads) -> EnergyRecord {
    let dt = stepper.dt;
    let ops = &stepper.ops;
    let ut: Vec<f64> = next.u.iter().zip(&prev.u).map(|(a, b)| (a - b) / dt).collect();
    let (dissipation, work) = if stepper.variant.is_viscous() {
        let zero = vec![0.0; ut.len()];
        let w = next.v2.as_deref().unwrap_or(&zero);
        let rel: Vec<f64> = ut.iter().zip(w).map(|(a, b)| a - b).collect();
        let v2 = ops.v2.as_ref().map(|v| v.bilinear(w, w)).unwrap_or(0.0);
        let d = ops.v1.bilinear(&ut, &ut) + v2 + stepper.params.beta_drag * ops.mass_v.bilinear(&rel, &rel);
        let wk = dot(&loads.fu, &ut) + dot(&loads.fw, w) + dot(&loads.g, &next.p);
        (d, wk)
    } else {
        let qt: Vec<f64> = next.q.iter().zip(&prev.q).map(|(a, b)| (a - b) / dt).collect();
        let d = ops.v1.bilinear(&ut, &ut)
            + stepper.params.mu1 * ops.mass_p.bilinear(&qt, &qt)
            + ops.k_kappa.bilinear(&next.p, &next.p);
        let wk = dot(&loads.fu, &ut) + dot(&loads.g, &next.p);
        (d, wk)
    };
    let e1 = energy(stepper, next);
    let e0 = energy(stepper, prev);
    EnergyRecord { step, t: next.t, energy: e1, dissipation, work, residual: e1 - e0 + dt * dissipation - dt * work }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{initial_state, Variant};
    use crate::material::{EffectiveModuli, MaterialParams};
    use crate::mesh::Mesh;

    #[test]
    fn residual_is_nonpositive() {
        let mesh = Mesh::unit_square(2).unwrap();
        let m = EffectiveModuli { lambda_t: 0.8, mu_t: 1.3, lambda_iso: 0.0, mu_iso: 0.0, kappa_perm: 0.2 };
        for v in Variant::ALL {
            let s = Stepper::with_moduli(v, 0.05, &MaterialParams::default(), 0.6, m, &mesh).unwrap();
            let loads = Loads::zero(s.n_u(), s.n_p());
            let mut prev = initial_state(&s, 1.05).unwrap();
            let mut last = energy(&s, &prev);
            for k in 1..=5 {
                let next = s.step(&prev, &loads).unwrap();
                let rec = energy_residual(&s, k, &prev, &next, &loads);
                assert!(rec.residual <= 1e-12 * last.abs().max(1.0), "{v:?} {rec:?}");
                assert!(rec.energy <= last * (1.0 + 1e-12), "{v:?}");
                last = rec.energy;
                prev = next;
            }
        }
    }
}
