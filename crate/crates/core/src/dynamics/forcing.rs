//! Boundary-data extensions and the load vectors they induce.

use crate::fem::assembly::{assemble_form, scalar_body_load, scalar_boundary_load, vector_body_load, vector_boundary_load, Form};
use crate::fem::dirichlet::apply_dirichlet;
use crate::fem::quadrature::triangle6;
use crate::fem::solver::solve_sparse;
use crate::fem::space::{basis_values, ElementGeometry, FemSpace, SpaceKind};
use crate::error::Result;
use crate::mesh::{EdgeTag, Mesh};

use super::{ScenarioConfig, Variant};

/// Extensions U, V of the boundary displacement and velocity data (vector
/// P2) and P of the boundary pressure (P1).
#[derive(Clone, Debug)]
pub struct Extensions {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

/// Zero displacement data on Γ₀ gives U = 0 and V = U_t = 0. The pressure
/// extension is zero for impermeable boundaries and the discrete harmonic
/// extension of P₀ from the closure of Γ otherwise.
pub fn build_extensions(config: &ScenarioConfig, mesh: &Mesh) -> Result<Extensions> {
    let v = FemSpace::new(SpaceKind::VectorP2, mesh);
    let s = FemSpace::new(SpaceKind::ScalarP1, mesh);
    let p = if config.variant.is_permeable() {
        harmonic_extension(&s, mesh, config.p0)?
    } else {
        vec![0.0; s.dof_count]
    };
    Ok(Extensions { u: vec![0.0; v.dof_count], v: vec![0.0; v.dof_count], p })
}

fn harmonic_extension(s: &FemSpace, mesh: &Mesh, p0: f64) -> Result<Vec<f64>> {
    let k = assemble_form(Form::ScalarDiffusion { kappa: 1.0 }, s, s, mesh)?;
    let dofs: Vec<usize> = (0..mesh.vertices.len()).filter(|&v| mesh.vertex_on_gamma_p_closure(v)).collect();
    let values = vec![p0; dofs.len()];
    let (a, b) = apply_dirichlet(&k, &vec![0.0; s.dof_count], &dofs, &values)?;
    solve_sparse(&a, &b)
}

/// Right-hand sides of one step: momentum of the mixture (inviscid) or the
/// polymer (viscous), fluid momentum (viscous only), and the scalar
/// equation (pressure equation, or the divergence constraint).
#[derive(Clone, Debug, PartialEq)]
pub struct Loads {
    pub fu: Vec<f64>,
    pub fw: Vec<f64>,
    pub g: Vec<f64>,
}

impl Loads {
    pub fn zero(n_u: usize, n_p: usize) -> Self {
        Loads { fu: vec![0.0; n_u], fw: vec![0.0; n_u], g: vec![0.0; n_p] }
    }
}

/// Source data given pointwise, used for manufactured solutions.
pub trait Forcing: Sync {
    fn body_u(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn body_w(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    /// Traction on Γ entering the first momentum equation.
    fn traction(&self, _x: [f64; 2], _n: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    /// Volumetric right-hand side of the scalar equation.
    fn source(&self, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }
    /// Natural flux κ∂p/∂n on ∂Ω (inviscid impermeable systems).
    fn flux(&self, _x: [f64; 2], _n: [f64; 2], _t: f64) -> f64 {
        0.0
    }
}

impl Loads {
    pub fn from_forcing(mesh: &Mesh, vspace: &FemSpace, pspace: &FemSpace, f: &dyn Forcing, t: f64) -> Loads {
        let mut fu = vector_body_load(vspace, mesh, &|x| f.body_u(x, t));
        let tr = vector_boundary_load(vspace, mesh, &[EdgeTag::GammaP], &|x, n| f.traction(x, n, t));
        for (a, b) in fu.iter_mut().zip(&tr) {
            *a += b;
        }
        let fw = vector_body_load(vspace, mesh, &|x| f.body_w(x, t));
        let mut g = scalar_body_load(pspace, mesh, &|x| f.source(x, t));
        let fl = scalar_boundary_load(pspace, mesh, &[EdgeTag::Gamma0, EdgeTag::GammaP], &|x, n| f.flux(x, n, t));
        for (a, b) in g.iter_mut().zip(&fl) {
            *a += b;
        }
        Loads { fu, fw, g }
    }
}

/// Forcing generated by the boundary pressure P₀ and its extension:
/// G = (P − P₀)n on Γ, f₁ = φ₀∇P, f₂ = (1 − φ₀)∇P, 𝓗 = −κ∇P, h = 0.
#[derive(Clone, Debug)]
pub struct ForcingTerms {
    pub variant: Variant,
    pub p0: f64,
    pub phi0: f64,
    pub kappa_perm: f64,
    pub ext: Extensions,
}

impl ForcingTerms {
    pub fn loads(&self, mesh: &Mesh, vspace: &FemSpace, pspace: &FemSpace) -> Result<Loads> {
        let p = &self.ext.p;
        // ∫_Γ (P − P₀) n·ω with P interpolated along the edge.
        let mut fu = vector_boundary_load(vspace, mesh, &[EdgeTag::GammaP], &|x, n| {
            let pe = p1_point_value(mesh, p, x);
            [(pe - self.p0) * n[0], (pe - self.p0) * n[1]]
        });
        let grad_load = gradient_load(mesh, vspace, pspace, p);
        let (su, sw) = if self.variant.is_viscous() { (self.phi0, 1.0 - self.phi0) } else { (1.0, 0.0) };
        for (a, b) in fu.iter_mut().zip(&grad_load) {
            *a -= su * b;
        }
        let fw = if self.variant.is_viscous() { grad_load.iter().map(|b| -sw * b).collect() } else { vec![0.0; vspace.dof_count] };
        let g = if self.variant.is_viscous() {
            vec![0.0; pspace.dof_count]
        } else {
            let k = assemble_form(Form::ScalarDiffusion { kappa: self.kappa_perm }, pspace, pspace, mesh)?;
            k.matvec(p).iter().map(|v| -v).collect()
        };
        Ok(Loads { fu, fw, g })
    }
}

/// Value at a boundary point of a P1 field living on the boundary vertices.
fn p1_point_value(mesh: &Mesh, p: &[f64], x: [f64; 2]) -> f64 {
    let n = 1usize << mesh.level;
    let h = mesh.h();
    let (i, j) = ((x[0] / h).floor() as usize, (x[1] / h).floor() as usize);
    let (i, j) = (i.min(n - 1), j.min(n - 1));
    let (sx, sy) = (x[0] / h - i as f64, x[1] / h - j as f64);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    // Boundary points lie on cell edges, where the split diagonal does not matter.
    (1.0 - sx) * (1.0 - sy) * p[id(i, j)]
        + sx * (1.0 - sy) * p[id(i + 1, j)]
        + (1.0 - sx) * sy * p[id(i, j + 1)]
        + sx * sy * p[id(i + 1, j + 1)]
}

/// ∫ ∇P·ω for P1 coefficients `p` and vector P2 test functions.
fn gradient_load(mesh: &Mesh, vspace: &FemSpace, pspace: &FemSpace, p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; vspace.dof_count];
    for t in 0..mesh.triangles.len() {
        let geo = ElementGeometry::new(mesh, t);
        let mut g = [0.0; 2];
        for (k, &d) in pspace.dof_map[t].iter().enumerate() {
            g[0] += p[d] * geo.grad_lambda[k][0];
            g[1] += p[d] * geo.grad_lambda[k][1];
        }
        if g == [0.0, 0.0] {
            continue;
        }
        for (l, w) in triangle6() {
            let v = basis_values(6, &l);
            for a in 0..6 {
                out[vspace.dof_map[t][a]] += w * geo.area * g[0] * v[a];
                out[vspace.dof_map[t][6 + a]] += w * geo.area * g[1] * v[a];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::MaterialParams;

    #[test]
    fn constant_extension() {
        let mesh = Mesh::unit_square(3).unwrap();
        let mut c = ScenarioConfig::new(Variant::InviscidPermeable, MaterialParams::default());
        c.p0 = 2.5;
        let ext = build_extensions(&c, &mesh).unwrap();
        assert!(ext.p.iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(ext.u.iter().all(|&v| v == 0.0));
        c.variant = Variant::InviscidImpermeable;
        let ext = build_extensions(&c, &mesh).unwrap();
        assert!(ext.p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impermeable_forcing_is_boundary_pressure() {
        let mesh = Mesh::unit_square(2).unwrap();
        let c = ScenarioConfig { p0: 3.0, ..ScenarioConfig::new(Variant::InviscidImpermeable, MaterialParams::default()) };
        let v = FemSpace::new(SpaceKind::VectorP2, &mesh);
        let s = FemSpace::new(SpaceKind::ScalarP1, &mesh);
        let ft = ForcingTerms { variant: c.variant, p0: c.p0, phi0: 0.5, kappa_perm: 1.0, ext: build_extensions(&c, &mesh).unwrap() };
        let l = ft.loads(&mesh, &v, &s).unwrap();
        let expect = vector_boundary_load(&v, &mesh, &[EdgeTag::GammaP], &|_, n| [-3.0 * n[0], -3.0 * n[1]]);
        assert_eq!(l.fu, expect);
        assert!(l.g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn permeable_forcing_vanishes_for_constant_pressure() {
        let mesh = Mesh::unit_square(2).unwrap();
        for variant in [Variant::InviscidPermeable, Variant::ViscousPermeable] {
            let c = ScenarioConfig { p0: 3.0, ..ScenarioConfig::new(variant, MaterialParams::default()) };
            let v = FemSpace::new(SpaceKind::VectorP2, &mesh);
            let s = FemSpace::new(SpaceKind::ScalarP1, &mesh);
            let ft = ForcingTerms { variant, p0: c.p0, phi0: 0.5, kappa_perm: 1.0, ext: build_extensions(&c, &mesh).unwrap() };
            let l = ft.loads(&mesh, &v, &s).unwrap();
            let m = l.fu.iter().chain(&l.fw).chain(&l.g).fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(m < 1e-11, "{m}");
        }
    }
}
