//! Block systems of one backward-Euler step.

use std::collections::BTreeMap;

use crate::equilibrium::EquilibriumState;
use crate::error::{GelError, Result};
use crate::fem::assembly::{assemble_form, Form};
use crate::fem::dirichlet::{apply_tie, constraint_map, eliminate_matrix, eliminate_rhs, tie_rhs};
use crate::fem::solver::Factorization;
use crate::fem::space::{FemSpace, SpaceKind};
use crate::fem::sparse::{SparseOperator, Triplets};
use crate::material::{effective_moduli, EffectiveModuli, MaterialParams};
use crate::mesh::{EdgeTag, Mesh};
use crate::stability::check_spherical;

use std::f64::consts::PI;

use super::{Loads, ScenarioConfig, SimState, Variant};

/// Operators shared by all variants.
#[derive(Clone, Debug)]
pub struct Operators {
    /// Elastic stiffness: deviatoric part only for inviscid systems.
    pub k: SparseOperator,
    /// η₁ D:D (inviscid) or η₁ D:D + μ₁ div div (viscous).
    pub v1: SparseOperator,
    /// η₂ D:D + μ₂ div div, viscous only.
    pub v2: Option<SparseOperator>,
    /// B: ∫ (∇·w)ψ, P1 rows by P2 vector columns.
    pub b: SparseOperator,
    pub mass_p: SparseOperator,
    pub mass_v: SparseOperator,
    pub k_kappa: SparseOperator,
}

/// Assembled and factored step system for one variant and time step.
pub struct Stepper {
    pub variant: Variant,
    pub dt: f64,
    pub phi0: f64,
    pub params: MaterialParams,
    pub moduli: EffectiveModuli,
    pub vspace: FemSpace,
    pub pspace: FemSpace,
    pub ops: Operators,
    /// Step matrix before ties and Dirichlet rows.
    raw: SparseOperator,
    /// Step matrix after ties, before Dirichlet rows.
    tied: SparseOperator,
    ties: Vec<(usize, usize)>,
    dirichlet: BTreeMap<usize, f64>,
    /// Γ₀ dof indices of the momentum rows, split by component.
    gamma0_rows: [Vec<usize>; 2],
    lu: Factorization,
    mass_lu: Factorization,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("variant", &self.variant).field("dt", &self.dt).field("n", &self.raw.n_rows).finish()
    }
}

impl Stepper {
    /// Builds the stepper for the linearization about `eq`.
    pub fn new(config: &ScenarioConfig, mesh: &Mesh, eq: &EquilibriumState) -> Result<Stepper> {
        let moduli = effective_moduli(eq.f0, eq.phi0, &config.params)?;
        Stepper::with_moduli(config.variant, config.dt, &config.params, eq.phi0, moduli, mesh)
    }

    /// Builds the stepper from given moduli. Refuses moduli that fail the
    /// spherical stability test.
    pub fn with_moduli(
        variant: Variant,
        dt: f64,
        params: &MaterialParams,
        phi0: f64,
        moduli: EffectiveModuli,
        mesh: &Mesh,
    ) -> Result<Stepper> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GelError::InvalidParams(format!("dt = {dt} must be positive")));
        }
        let sc = check_spherical(&moduli);
        if !sc.ok {
            return Err(GelError::StabilityGate(format!(
                "mu_t = {:.6e}, 3 lambda_t + 2 mu_t = {:.6e}",
                sc.mu_t_margin, sc.bulk_margin
            )));
        }
        let vspace = FemSpace::new(SpaceKind::VectorP2, mesh);
        let pspace = FemSpace::new(SpaceKind::ScalarP1, mesh);
        let ops = assemble_operators(variant, params, &moduli, &vspace, &pspace, mesh)?;
        let nu = vspace.dof_count;
        let np = pspace.dof_count;
        let viscous = variant.is_viscous();
        let raw = if viscous {
            viscous_matrix(&ops, params, phi0, dt, nu, np)?
        } else {
            inviscid_matrix(&ops, &moduli, params, dt, nu, np)?
        };
        let n = raw.n_rows;

        let g0 = vspace.boundary(EdgeTag::Gamma0).to_vec();
        let gp = vspace.boundary(EdgeTag::GammaP).to_vec();
        let nn = vspace.n_nodes;
        let gamma0_rows = [
            g0.iter().copied().filter(|&d| d < nn).collect::<Vec<_>>(),
            g0.iter().copied().filter(|&d| d >= nn).collect::<Vec<_>>(),
        ];
        let mut dofs: Vec<usize> = g0.clone();
        if viscous {
            dofs.extend(g0.iter().map(|d| nu + d));
        }
        if variant.is_permeable() {
            let off = if viscous { 2 * nu } else { nu + np };
            for v in 0..mesh.vertices.len() {
                if mesh.vertex_on_gamma_p_closure(v) {
                    dofs.push(off + v);
                }
            }
        }
        let ties: Vec<(usize, usize)> = if variant == Variant::ViscousImpermeable {
            let g0set: std::collections::BTreeSet<usize> = g0.iter().copied().collect();
            gp.iter().copied().filter(|d| !g0set.contains(d)).map(|d| (d, nu + d)).collect()
        } else {
            Vec::new()
        };
        let tied = if ties.is_empty() { raw.clone() } else { apply_tie(&raw, &ties, dt) };
        let dirichlet = constraint_map(&dofs, &vec![0.0; dofs.len()], n)?;
        let mut constrained = vec![false; n];
        for &d in dirichlet.keys() {
            constrained[d] = true;
        }
        let a = eliminate_matrix(&tied, &constrained);
        let lu = Factorization::new(&a)?;
        let mass_lu = Factorization::new(&ops.mass_p)?;
        Ok(Stepper {
            variant,
            dt,
            phi0,
            params: params.clone(),
            moduli,
            vspace,
            pspace,
            ops,
            raw,
            tied,
            ties,
            dirichlet,
            gamma0_rows,
            lu,
            mass_lu,
        })
    }

    pub fn n_u(&self) -> usize {
        self.vspace.dof_count
    }

    pub fn n_p(&self) -> usize {
        self.pspace.dof_count
    }

    pub fn system_size(&self) -> usize {
        self.raw.n_rows
    }

    /// L²-projection of ∇·u onto P1.
    pub fn project_divergence(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.mass_lu.solve(&self.ops.b.matvec(u))
    }

    fn pack(&self, s: &SimState) -> Vec<f64> {
        let mut x = s.u.clone();
        if self.variant.is_viscous() {
            x.extend(s.v2.clone().unwrap_or_else(|| vec![0.0; self.n_u()]));
        } else {
            x.extend(&s.q);
        }
        x.extend(&s.p);
        x
    }

    /// Right-hand side before ties and Dirichlet rows.
    fn raw_rhs(&self, prev: &SimState, loads: &Loads) -> Vec<f64> {
        let (nu, np, dt) = (self.n_u(), self.n_p(), self.dt);
        let p = &self.params;
        let ops = &self.ops;
        if self.variant.is_viscous() {
            let mv_u = ops.mass_v.matvec(&prev.u);
            let v1_u = ops.v1.matvec(&prev.u);
            let b_u = ops.b.matvec(&prev.u);
            let mut r = Vec::with_capacity(2 * nu + np);
            r.extend((0..nu).map(|i| loads.fu[i] + v1_u[i] / dt + p.beta_drag * mv_u[i] / dt));
            r.extend((0..nu).map(|i| loads.fw[i] - p.beta_drag * mv_u[i] / dt));
            r.extend((0..np).map(|i| loads.g[i] + self.phi0 * b_u[i] / dt));
            r
        } else {
            let ke_u = ops.v1.matvec(&prev.u);
            let bt_q = ops.b.transpose().matvec(&prev.q);
            let m_q = ops.mass_p.matvec(&prev.q);
            let mut r = Vec::with_capacity(nu + 2 * np);
            r.extend((0..nu).map(|i| loads.fu[i] + ke_u[i] / dt + p.mu1 * bt_q[i] / dt));
            r.extend(std::iter::repeat(0.0).take(np));
            r.extend((0..np).map(|i| m_q[i] / dt + loads.g[i]));
            r
        }
    }

    /// Advances `prev` by one step.
    pub fn step(&self, prev: &SimState, loads: &Loads) -> Result<SimState> {
        let (nu, np) = (self.n_u(), self.n_p());
        let mut rhs = self.raw_rhs(prev, loads);
        if !self.ties.is_empty() {
            let mut previous = vec![0.0; rhs.len()];
            previous[..nu].copy_from_slice(&prev.u);
            tie_rhs(&mut rhs, &self.ties, &previous, self.dt);
        }
        let rhs = eliminate_rhs(&self.tied, &rhs, &self.dirichlet);
        let x = self.lu.solve(&rhs)?;
        let u = x[..nu].to_vec();
        let t = prev.t + self.dt;
        if self.variant.is_viscous() {
            let w = x[nu..2 * nu].to_vec();
            let p = x[2 * nu..2 * nu + np].to_vec();
            let q = self.project_divergence(&u)?;
            Ok(SimState { t, u, q, p, v2: Some(w) })
        } else {
            let q = x[nu..nu + np].to_vec();
            let p = x[nu + np..].to_vec();
            Ok(SimState { t, u, q, p, v2: None })
        }
    }

    /// Net force that the Γ₀ support exerts through the momentum rows,
    /// summed per component: polymer and fluid rows for viscous systems.
    pub fn reaction(&self, prev: &SimState, next: &SimState, loads: &Loads) -> [f64; 2] {
        let r = self.row_residual(prev, next, loads);
        let nu = self.n_u();
        let mut out = [0.0; 2];
        for c in 0..2 {
            for &d in &self.gamma0_rows[c] {
                out[c] += r[d];
                if self.variant.is_viscous() {
                    out[c] += r[nu + d];
                }
            }
        }
        out
    }

    /// A xⁿ⁺¹ − b for the unconstrained step system.
    pub fn row_residual(&self, prev: &SimState, next: &SimState, loads: &Loads) -> Vec<f64> {
        let rhs = self.raw_rhs(prev, loads);
        let ax = self.raw.matvec(&self.pack(next));
        ax.iter().zip(&rhs).map(|(a, b)| a - b).collect()
    }

    /// Dirichlet and tied dofs of the step system.
    pub fn constrained_dofs(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.dirichlet.keys().copied().collect();
        d.extend(self.ties.iter().map(|&(_, j)| j));
        d.sort_unstable();
        d
    }
}

fn assemble_operators(
    variant: Variant,
    p: &MaterialParams,
    m: &EffectiveModuli,
    vs: &FemSpace,
    ps: &FemSpace,
    mesh: &Mesh,
) -> Result<Operators> {
    let viscous = variant.is_viscous();
    let lambda = if viscous { m.lambda_t } else { 0.0 };
    let k = assemble_form(Form::VectorElasticity { lambda, mu: m.mu_t }, vs, vs, mesh)?;
    let v1_bulk = if viscous { p.mu1 } else { 0.0 };
    let v1 = assemble_form(Form::VectorViscosity { eta: p.eta1, mu_bulk: v1_bulk }, vs, vs, mesh)?;
    let v2 = if viscous {
        Some(assemble_form(Form::VectorViscosity { eta: p.eta2, mu_bulk: p.mu2 }, vs, vs, mesh)?)
    } else {
        None
    };
    Ok(Operators {
        k,
        v1,
        v2,
        b: assemble_form(Form::DivCoupling { weight: 1.0 }, vs, ps, mesh)?,
        mass_p: assemble_form(Form::Mass, ps, ps, mesh)?,
        mass_v: assemble_form(Form::Mass, vs, vs, mesh)?,
        k_kappa: assemble_form(Form::ScalarDiffusion { kappa: m.kappa_perm }, ps, ps, mesh)?,
    })
}

/// Unknowns [U, Q, P].
fn inviscid_matrix(
    ops: &Operators,
    m: &EffectiveModuli,
    p: &MaterialParams,
    dt: f64,
    nu: usize,
    np: usize,
) -> Result<SparseOperator> {
    let n = nu + 2 * np;
    let (oq, op) = (nu, nu + np);
    let mut t = Triplets::new(n, n);
    t.add_block(&ops.k, 0, 0, 1.0);
    t.add_block(&ops.v1, 0, 0, 1.0 / dt);
    t.add_block_transpose(&ops.b, 0, oq, m.lambda_t + p.mu1 / dt);
    t.add_block_transpose(&ops.b, 0, op, -1.0);
    t.add_block(&ops.b, oq, 0, -1.0);
    t.add_block(&ops.mass_p, oq, oq, 1.0);
    t.add_block(&ops.mass_p, op, oq, 1.0 / dt);
    t.add_block(&ops.k_kappa, op, op, 1.0);
    Ok(t.finalize(false))
}

/// Unknowns [u, w, p].
fn viscous_matrix(
    ops: &Operators,
    p: &MaterialParams,
    phi0: f64,
    dt: f64,
    nu: usize,
    np: usize,
) -> Result<SparseOperator> {
    let n = 2 * nu + np;
    let (ow, op) = (nu, 2 * nu);
    let beta = p.beta_drag;
    let v2 = ops.v2.as_ref().ok_or_else(|| GelError::InvalidParams("missing fluid viscosity".into()))?;
    let mut t = Triplets::new(n, n);
    t.add_block(&ops.k, 0, 0, 1.0);
    t.add_block(&ops.v1, 0, 0, 1.0 / dt);
    t.add_block(&ops.mass_v, 0, 0, beta / dt);
    t.add_block(&ops.mass_v, 0, ow, -beta);
    t.add_block_transpose(&ops.b, 0, op, -phi0);
    t.add_block(&ops.mass_v, ow, 0, -beta / dt);
    t.add_block(v2, ow, ow, 1.0);
    t.add_block(&ops.mass_v, ow, ow, beta);
    t.add_block_transpose(&ops.b, ow, op, -(1.0 - phi0));
    t.add_block(&ops.b, op, 0, phi0 / dt);
    t.add_block(&ops.b, op, ow, 1.0 - phi0);
    Ok(t.finalize(false))
}

/// u₀ = g(½π⁻¹ sin 2πx, y(1 − cos 2πx)) with g = f(1 − f³), so that
/// ∇·u₀ = g; q₀ is its P1 projection and the remaining fields vanish.
pub fn initial_state(stepper: &Stepper, f: f64) -> Result<SimState> {
    let g = f * (1.0 - f.powi(3));
    let u = stepper
        .vspace
        .interpolate_vector(|x| [g * (2.0 * PI * x[0]).sin() / (2.0 * PI), g * x[1] * (1.0 - (2.0 * PI * x[0]).cos())]);
    let q = stepper.project_divergence(&u)?;
    let v2 = stepper.variant.is_viscous().then(|| vec![0.0; stepper.n_u()]);
    Ok(SimState { t: 0.0, u, q, p: vec![0.0; stepper.n_p()], v2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sparse::norm2;

    fn moduli() -> EffectiveModuli {
        EffectiveModuli { lambda_t: 0.8, mu_t: 1.3, lambda_iso: 0.0, mu_iso: 0.0, kappa_perm: 0.2 }
    }

    fn stepper(variant: Variant) -> Stepper {
        let mesh = Mesh::unit_square(2).unwrap();
        Stepper::with_moduli(variant, 0.05, &MaterialParams::default(), 0.6, moduli(), &mesh).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        for v in Variant::ALL {
            let s = stepper(v);
            let z = SimState {
                t: 0.0,
                u: vec![0.0; s.n_u()],
                q: vec![0.0; s.n_p()],
                p: vec![0.0; s.n_p()],
                v2: v.is_viscous().then(|| vec![0.0; s.n_u()]),
            };
            let next = s.step(&z, &Loads::zero(s.n_u(), s.n_p())).unwrap();
            assert_eq!(next.max_abs(), 0.0, "{v:?}");
            assert!((next.t - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn gate_refuses_unstable_moduli() {
        let mesh = Mesh::unit_square(1).unwrap();
        let bad = EffectiveModuli { mu_t: -1.0, ..moduli() };
        let r = Stepper::with_moduli(Variant::InviscidPermeable, 0.1, &MaterialParams::default(), 0.6, bad, &mesh);
        assert!(matches!(r, Err(GelError::StabilityGate(_))));
    }

    #[test]
    fn inviscid_q_matches_projection() {
        for v in [Variant::InviscidImpermeable, Variant::InviscidPermeable] {
            let s = stepper(v);
            let s0 = initial_state(&s, 1.05).unwrap();
            let s1 = s.step(&s0, &Loads::zero(s.n_u(), s.n_p())).unwrap();
            let q = s.project_divergence(&s1.u).unwrap();
            let d: Vec<f64> = q.iter().zip(&s1.q).map(|(a, b)| a - b).collect();
            assert!(norm2(&d) <= 1e-10 * norm2(&q).max(1e-300));
        }
    }

    #[test]
    fn viscous_constraint_holds() {
        for v in [Variant::ViscousImpermeable, Variant::ViscousPermeable] {
            let s = stepper(v);
            let s0 = initial_state(&s, 1.05).unwrap();
            let s1 = s.step(&s0, &Loads::zero(s.n_u(), s.n_p())).unwrap();
            let w = s1.v2.as_ref().unwrap();
            let ut: Vec<f64> = s1.u.iter().zip(&s0.u).map(|(a, b)| (a - b) / s.dt).collect();
            let mix: Vec<f64> = ut.iter().zip(w).map(|(a, b)| s.phi0 * a + (1.0 - s.phi0) * b).collect();
            // Rows of pressure nodes carrying Dirichlet data are not constraints.
            let off = 2 * s.n_u();
            let free: Vec<bool> = (0..s.n_p()).map(|i| !s.dirichlet.contains_key(&(off + i))).collect();
            let pick = |r: Vec<f64>| r.into_iter().zip(&free).filter(|(_, &f)| f).map(|(x, _)| x).collect::<Vec<_>>();
            let r = pick(s.ops.b.matvec(&mix));
            assert!(norm2(&r) < 1e-9 * norm2(&pick(s.ops.b.matvec(&ut))), "{v:?}");
        }
    }

    #[test]
    fn reaction_balances_momentum_rows() {
        for v in Variant::ALL {
            let s = stepper(v);
            let s0 = initial_state(&s, 1.05).unwrap();
            let loads = Loads::zero(s.n_u(), s.n_p());
            let s1 = s.step(&s0, &loads).unwrap();
            let r = s.row_residual(&s0, &s1, &loads);
            let constrained = s.constrained_dofs();
            let free_max = (0..r.len())
                .filter(|d| constrained.binary_search(d).is_err() && !s.ties.iter().any(|&(i, _)| i == *d))
                .fold(0.0f64, |m, d| m.max(r[d].abs()));
            assert!(free_max < 1e-10, "{v:?} {free_max}");
            let f = s.reaction(&s0, &s1, &loads);
            assert!(f.iter().all(|x| x.is_finite()));
        }
    }
}
