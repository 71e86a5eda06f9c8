//! Global assembly of bilinear forms, load vectors and field evaluation.

use rayon::prelude::*;

use super::quadrature::{gauss3, triangle6};
use super::space::{basis_gradients, basis_values, ElementGeometry, FemSpace, SpaceKind};
use super::sparse::{SparseOperator, Triplets};
use crate::error::{GelError, Result};
use crate::mesh::{EdgeTag, Mesh};

/// Bilinear forms with constant coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Form {
    /// ∫ 2μ D(u):D(w) + λ (∇·u)(∇·w).
    VectorElasticity { lambda: f64, mu: f64 },
    /// ∫ η D(v):D(w) + μ_b (∇·v)(∇·w).
    VectorViscosity { eta: f64, mu_bulk: f64 },
    /// ∫ κ ∇p·∇ψ.
    ScalarDiffusion { kappa: f64 },
    /// ∫ φψ on a scalar space, ∫ v·w on a vector space.
    Mass,
    /// ∫ weight (∇·w) ψ; trial is vector P2, test is scalar.
    DivCoupling { weight: f64 },
}

fn local_count(s: &FemSpace) -> usize {
    s.dof_map.first().map(Vec::len).unwrap_or(0)
}

/// Assembles element matrices (test-major, `n_test × n_trial`) supplied by `kernel`.
fn assemble<K>(mesh: &Mesh, trial: &FemSpace, test: &FemSpace, symmetric: bool, kernel: K) -> SparseOperator
where
    K: Fn(&ElementGeometry) -> Vec<f64> + Sync,
{
    let nt = local_count(test);
    let nu = local_count(trial);
    let locals: Vec<Vec<f64>> =
        (0..mesh.triangles.len()).into_par_iter().map(|t| kernel(&ElementGeometry::new(mesh, t))).collect();
    let mut trip = Triplets::new(test.dof_count, trial.dof_count);
    trip.entries.reserve(locals.len() * nt * nu);
    for (t, local) in locals.iter().enumerate() {
        let (rows, cols) = (&test.dof_map[t], &trial.dof_map[t]);
        for i in 0..nt {
            for j in 0..nu {
                let v = local[i * nu + j];
                if v != 0.0 {
                    trip.push(rows[i], cols[j], v);
                }
            }
        }
    }
    trip.finalize(symmetric)
}

fn vector_kernel(geo: &ElementGeometry, c_d: f64, c_v: f64) -> Vec<f64> {
    let mut k = vec![0.0; 144];
    for (l, w) in triangle6() {
        let g = basis_gradients(6, &l, geo);
        let wa = w * geo.area;
        for c in 0..2 {
            for a in 0..6 {
                let row = c * 6 + a;
                for d in 0..2 {
                    for b in 0..6 {
                        let col = d * 6 + b;
                        // test φ_a e_c, trial φ_b e_d
                        let dot = if c == d { g[a][0] * g[b][0] + g[a][1] * g[b][1] } else { 0.0 };
                        let dd = 0.5 * (dot + g[a][d] * g[b][c]);
                        k[row * 12 + col] += wa * (c_d * dd + c_v * g[a][c] * g[b][d]);
                    }
                }
            }
        }
    }
    k
}

fn scalar_kernel(geo: &ElementGeometry, n: usize, kappa: f64, mass: f64) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for (l, w) in triangle6() {
        let v = basis_values(n, &l);
        let g = basis_gradients(n, &l, geo);
        let wa = w * geo.area;
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] += wa * (kappa * (g[i][0] * g[j][0] + g[i][1] * g[j][1]) + mass * v[i] * v[j]);
            }
        }
    }
    k
}

fn vector_mass_kernel(geo: &ElementGeometry) -> Vec<f64> {
    let s = scalar_kernel(geo, 6, 0.0, 1.0);
    let mut k = vec![0.0; 144];
    for c in 0..2 {
        for a in 0..6 {
            for b in 0..6 {
                k[(c * 6 + a) * 12 + c * 6 + b] = s[a * 6 + b];
            }
        }
    }
    k
}

fn div_kernel(geo: &ElementGeometry, n_test: usize, weight: f64) -> Vec<f64> {
    let mut k = vec![0.0; n_test * 12];
    for (l, w) in triangle6() {
        let psi = basis_values(n_test, &l);
        let g = basis_gradients(6, &l, geo);
        let wa = w * geo.area * weight;
        for i in 0..n_test {
            for c in 0..2 {
                for a in 0..6 {
                    k[i * 12 + c * 6 + a] += wa * psi[i] * g[a][c];
                }
            }
        }
    }
    k
}

pub fn assemble_form(form: Form, trial: &FemSpace, test: &FemSpace, mesh: &Mesh) -> Result<SparseOperator> {
    let mismatch = |m: &str| Err(GelError::DimensionMismatch(format!("{form:?}: {m}")));
    if trial.dof_map.len() != mesh.triangles.len() || test.dof_map.len() != mesh.triangles.len() {
        return mismatch("space built on a different mesh");
    }
    match form {
        Form::VectorElasticity { lambda, mu } => {
            if trial.kind != SpaceKind::VectorP2 || test.kind != SpaceKind::VectorP2 {
                return mismatch("needs vector P2 spaces");
            }
            Ok(assemble(mesh, trial, test, true, |g| vector_kernel(g, 2.0 * mu, lambda)))
        }
        Form::VectorViscosity { eta, mu_bulk } => {
            if trial.kind != SpaceKind::VectorP2 || test.kind != SpaceKind::VectorP2 {
                return mismatch("needs vector P2 spaces");
            }
            Ok(assemble(mesh, trial, test, true, |g| vector_kernel(g, eta, mu_bulk)))
        }
        Form::ScalarDiffusion { kappa } => {
            if trial.kind != test.kind || trial.kind == SpaceKind::VectorP2 {
                return mismatch("needs equal scalar spaces");
            }
            let n = trial.local_scalar_count();
            Ok(assemble(mesh, trial, test, true, |g| scalar_kernel(g, n, kappa, 0.0)))
        }
        Form::Mass => {
            if trial.kind != test.kind {
                return mismatch("needs equal spaces");
            }
            if trial.kind == SpaceKind::VectorP2 {
                Ok(assemble(mesh, trial, test, true, vector_mass_kernel))
            } else {
                let n = trial.local_scalar_count();
                Ok(assemble(mesh, trial, test, true, |g| scalar_kernel(g, n, 0.0, 1.0)))
            }
        }
        Form::DivCoupling { weight } => {
            if trial.kind != SpaceKind::VectorP2 || test.kind == SpaceKind::VectorP2 {
                return mismatch("needs vector trial and scalar test");
            }
            let n = test.local_scalar_count();
            Ok(assemble(mesh, trial, test, false, |g| div_kernel(g, n, weight)))
        }
    }
}

/// ∫ f·w over Ω for a vector P2 test space.
pub fn vector_body_load(space: &FemSpace, mesh: &Mesh, f: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)) -> Vec<f64> {
    assert_eq!(space.kind, SpaceKind::VectorP2);
    let locals: Vec<[f64; 12]> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let geo = ElementGeometry::new(mesh, t);
            let mut b = [0.0; 12];
            for (l, w) in triangle6() {
                let v = basis_values(6, &l);
                let fx = f(geo.point(&l));
                for a in 0..6 {
                    b[a] += w * geo.area * fx[0] * v[a];
                    b[6 + a] += w * geo.area * fx[1] * v[a];
                }
            }
            b
        })
        .collect();
    let mut out = vec![0.0; space.dof_count];
    for (t, b) in locals.iter().enumerate() {
        for (k, &d) in space.dof_map[t].iter().enumerate() {
            out[d] += b[k];
        }
    }
    out
}

/// ∫ f ψ over Ω for a scalar test space.
pub fn scalar_body_load(space: &FemSpace, mesh: &Mesh, f: &(dyn Fn([f64; 2]) -> f64 + Sync)) -> Vec<f64> {
    assert_ne!(space.kind, SpaceKind::VectorP2);
    let n = space.local_scalar_count();
    let mut out = vec![0.0; space.dof_count];
    for t in 0..mesh.triangles.len() {
        let geo = ElementGeometry::new(mesh, t);
        for (l, w) in triangle6() {
            let v = basis_values(n, &l);
            let fx = f(geo.point(&l));
            for (k, &d) in space.dof_map[t].iter().enumerate() {
                out[d] += w * geo.area * fx * v[k];
            }
        }
    }
    out
}

/// Nodes of a boundary edge with their 1D basis at parameter s ∈ [0,1].
fn edge_basis(space: &FemSpace, mesh: &Mesh, e: usize, s: f64) -> Vec<(usize, f64)> {
    let [a, b] = mesh.edges[e].v;
    match space.kind {
        SpaceKind::ScalarP1 => vec![(a, 1.0 - s), (b, s)],
        _ => vec![
            (a, (1.0 - s) * (1.0 - 2.0 * s)),
            (b, s * (2.0 * s - 1.0)),
            (mesh.vertices.len() + e, 4.0 * s * (1.0 - s)),
        ],
    }
}

/// ∫_tag g(x, n)·w ds for a vector P2 test space.
pub fn vector_boundary_load(
    space: &FemSpace,
    mesh: &Mesh,
    tags: &[EdgeTag],
    g: &dyn Fn([f64; 2], [f64; 2]) -> [f64; 2],
) -> Vec<f64> {
    assert_eq!(space.kind, SpaceKind::VectorP2);
    let mut out = vec![0.0; space.dof_count];
    for (e, edge) in mesh.boundary_edges() {
        if !tags.contains(&edge.tag) {
            continue;
        }
        let n = mesh.edge_normal(e);
        let [pa, pb] = edge.v.map(|v| mesh.vertices[v]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        for (s, w) in gauss3() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let gx = g(x, n);
            for (d, phi) in edge_basis(space, mesh, e, s) {
                out[d] += w * len * gx[0] * phi;
                out[d + space.n_nodes] += w * len * gx[1] * phi;
            }
        }
    }
    out
}

/// ∫_tag g(x, n) ψ ds for a scalar test space.
pub fn scalar_boundary_load(
    space: &FemSpace,
    mesh: &Mesh,
    tags: &[EdgeTag],
    g: &dyn Fn([f64; 2], [f64; 2]) -> f64,
) -> Vec<f64> {
    assert_ne!(space.kind, SpaceKind::VectorP2);
    let mut out = vec![0.0; space.dof_count];
    for (e, edge) in mesh.boundary_edges() {
        if !tags.contains(&edge.tag) {
            continue;
        }
        let n = mesh.edge_normal(e);
        let [pa, pb] = edge.v.map(|v| mesh.vertices[v]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        for (s, w) in gauss3() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let gx = g(x, n);
            for (d, phi) in edge_basis(space, mesh, e, s) {
                out[d] += w * len * gx * phi;
            }
        }
    }
    out
}

/// Value of a scalar field at barycentric point `l` of triangle `t`.
pub fn scalar_at(space: &FemSpace, coeffs: &[f64], t: usize, l: &[f64; 3]) -> f64 {
    let n = space.local_scalar_count();
    let v = basis_values(n, l);
    space.dof_map[t].iter().zip(&v[..n]).map(|(&d, b)| coeffs[d] * b).sum()
}

pub fn scalar_grad_at(space: &FemSpace, geo: &ElementGeometry, coeffs: &[f64], t: usize, l: &[f64; 3]) -> [f64; 2] {
    let n = space.local_scalar_count();
    let g = basis_gradients(n, l, geo);
    let mut out = [0.0; 2];
    for (k, &d) in space.dof_map[t].iter().enumerate() {
        out[0] += coeffs[d] * g[k][0];
        out[1] += coeffs[d] * g[k][1];
    }
    out
}

pub fn vector_at(space: &FemSpace, coeffs: &[f64], t: usize, l: &[f64; 3]) -> [f64; 2] {
    let v = basis_values(6, l);
    let map = &space.dof_map[t];
    let mut out = [0.0; 2];
    for a in 0..6 {
        out[0] += coeffs[map[a]] * v[a];
        out[1] += coeffs[map[6 + a]] * v[a];
    }
    out
}

/// ∂u_c/∂x_d as `[[∂u₀/∂x, ∂u₀/∂y], [∂u₁/∂x, ∂u₁/∂y]]`.
pub fn vector_grad_at(
    space: &FemSpace,
    geo: &ElementGeometry,
    coeffs: &[f64],
    t: usize,
    l: &[f64; 3],
) -> [[f64; 2]; 2] {
    let g = basis_gradients(6, l, geo);
    let map = &space.dof_map[t];
    let mut out = [[0.0; 2]; 2];
    for c in 0..2 {
        for a in 0..6 {
            let u = coeffs[map[c * 6 + a]];
            out[c][0] += u * g[a][0];
            out[c][1] += u * g[a][1];
        }
    }
    out
}

/// ‖u_h − u‖_{L²(Ω)} for a vector P2 field.
pub fn l2_error_vector(space: &FemSpace, mesh: &Mesh, coeffs: &[f64], exact: &dyn Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let mut sum = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = ElementGeometry::new(mesh, t);
        for (l, w) in triangle6() {
            let uh = vector_at(space, coeffs, t, &l);
            let u = exact(geo.point(&l));
            sum += w * geo.area * ((uh[0] - u[0]).powi(2) + (uh[1] - u[1]).powi(2));
        }
    }
    sum.sqrt()
}

/// ‖p_h − p‖_{L²(Ω)} for a scalar field.
pub fn l2_error_scalar(space: &FemSpace, mesh: &Mesh, coeffs: &[f64], exact: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let mut sum = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = ElementGeometry::new(mesh, t);
        for (l, w) in triangle6() {
            let d = scalar_at(space, coeffs, t, &l) - exact(geo.point(&l));
            sum += w * geo.area * d * d;
        }
    }
    sum.sqrt()
}
