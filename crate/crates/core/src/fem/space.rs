//! Scalar P1/P2 and vector P2 spaces, local bases and element geometry.

use std::collections::BTreeMap;

use crate::mesh::{EdgeTag, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    ScalarP1,
    ScalarP2,
    VectorP2,
}

#[derive(Clone, Debug)]
pub struct FemSpace {
    pub kind: SpaceKind,
    pub dof_count: usize,
    /// Number of scalar nodes; the vector space stores component c of node
    /// a at `c * n_nodes + a`.
    pub n_nodes: usize,
    /// Local-to-global map per triangle: 3 (P1), 6 (P2) or 12 (vector P2,
    /// x components first).
    pub dof_map: Vec<Vec<usize>>,
    /// Dofs on the two boundary parts. Corner nodes are listed under Γ₀ only.
    pub boundary_dofs: BTreeMap<EdgeTag, Vec<usize>>,
    /// Coordinates of the scalar nodes.
    pub nodes: Vec<[f64; 2]>,
}

impl FemSpace {
    pub fn new(kind: SpaceKind, mesh: &Mesh) -> FemSpace {
        let nv = mesh.vertices.len();
        let mut nodes = mesh.vertices.clone();
        if kind != SpaceKind::ScalarP1 {
            for e in &mesh.edges {
                let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
                nodes.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        let n_nodes = nodes.len();
        let scalar_map: Vec<Vec<usize>> = mesh
            .triangles
            .iter()
            .zip(&mesh.tri_edges)
            .map(|(t, te)| match kind {
                SpaceKind::ScalarP1 => t.to_vec(),
                _ => vec![t[0], t[1], t[2], nv + te[0], nv + te[1], nv + te[2]],
            })
            .collect();

        let mut gamma0 = Vec::new();
        let mut gamma_p = Vec::new();
        for v in 0..nv {
            if mesh.vertex_on_gamma0(v) {
                gamma0.push(v);
            } else if mesh.vertex_on_boundary(v) {
                gamma_p.push(v);
            }
        }
        if kind != SpaceKind::ScalarP1 {
            for (e, edge) in mesh.boundary_edges() {
                match edge.tag {
                    EdgeTag::Gamma0 => gamma0.push(nv + e),
                    EdgeTag::GammaP => gamma_p.push(nv + e),
                    EdgeTag::Interior => {}
                }
            }
        }
        gamma0.sort_unstable();
        gamma_p.sort_unstable();

        let (dof_count, dof_map, gamma0, gamma_p) = if kind == SpaceKind::VectorP2 {
            let lift = |s: &[usize]| s.iter().copied().chain(s.iter().map(|d| d + n_nodes)).collect::<Vec<_>>();
            let map = scalar_map.iter().map(|m| lift(m)).collect();
            (2 * n_nodes, map, lift(&gamma0), lift(&gamma_p))
        } else {
            (n_nodes, scalar_map, gamma0, gamma_p)
        };
        let mut boundary_dofs = BTreeMap::new();
        boundary_dofs.insert(EdgeTag::Gamma0, gamma0);
        boundary_dofs.insert(EdgeTag::GammaP, gamma_p);
        FemSpace { kind, dof_count, n_nodes, dof_map, boundary_dofs, nodes }
    }

    pub fn local_scalar_count(&self) -> usize {
        match self.kind {
            SpaceKind::ScalarP1 => 3,
            _ => 6,
        }
    }

    pub fn boundary(&self, tag: EdgeTag) -> &[usize] {
        self.boundary_dofs.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Nodal interpolation of a vector field (vector P2) or scalar field.
    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.kind, SpaceKind::VectorP2);
        let mut out = vec![0.0; self.dof_count];
        for (a, &x) in self.nodes.iter().enumerate() {
            let v = f(x);
            out[a] = v[0];
            out[a + self.n_nodes] = v[1];
        }
        out
    }

    pub fn interpolate_scalar(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        assert_ne!(self.kind, SpaceKind::VectorP2);
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

/// Affine geometry of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// ∇λ_i.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let p = mesh.triangles[t].map(|v| mesh.vertices[v]);
        Self::from_points(p)
    }

    pub fn from_points(p: [[f64; 2]; 3]) -> Self {
        let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let g = |i: usize, j: usize| [(p[i][1] - p[j][1]) / two_a, (p[j][0] - p[i][0]) / two_a];
        ElementGeometry { vertices: p, area: 0.5 * two_a, grad_lambda: [g(1, 2), g(2, 0), g(0, 1)] }
    }

    pub fn point(&self, l: &[f64; 3]) -> [f64; 2] {
        let p = &self.vertices;
        [
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        ]
    }
}

/// Values of the P1 (n = 3) or P2 (n = 6) basis at barycentric point `l`.
pub fn basis_values(n: usize, l: &[f64; 3]) -> [f64; 6] {
    let mut v = [0.0; 6];
    if n == 3 {
        v[..3].copy_from_slice(l);
    } else {
        for i in 0..3 {
            v[i] = l[i] * (2.0 * l[i] - 1.0);
        }
        v[3] = 4.0 * l[0] * l[1];
        v[4] = 4.0 * l[1] * l[2];
        v[5] = 4.0 * l[2] * l[0];
    }
    v
}

/// Physical gradients of the P1 or P2 basis at barycentric point `l`.
pub fn basis_gradients(n: usize, l: &[f64; 3], geo: &ElementGeometry) -> [[f64; 2]; 6] {
    let g = &geo.grad_lambda;
    let mut out = [[0.0; 2]; 6];
    if n == 3 {
        out[..3].copy_from_slice(g);
    } else {
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + k] = [4.0 * (l[i] * g[j][0] + l[j] * g[i][0]), 4.0 * (l[i] * g[j][1] + l[j] * g[i][1])];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        let m = Mesh::unit_square(5).unwrap();
        let p1 = FemSpace::new(SpaceKind::ScalarP1, &m);
        let p2 = FemSpace::new(SpaceKind::ScalarP2, &m);
        let v2 = FemSpace::new(SpaceKind::VectorP2, &m);
        assert_eq!(p1.dof_count, 1089);
        assert_eq!(m.edges.len(), 3136);
        assert_eq!(p2.dof_count, 4225);
        assert_eq!(v2.dof_count, 8450);
        for map in &v2.dof_map {
            let mut s = map.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 12);
        }
    }

    #[test]
    fn boundary_partition() {
        let m = Mesh::unit_square(2).unwrap();
        let p2 = FemSpace::new(SpaceKind::ScalarP2, &m);
        // 4 + ... : each of the two Γ0 sides has 2·4+1 nodes.
        assert_eq!(p2.boundary(EdgeTag::Gamma0).len(), 18);
        // Γ sides without their corner nodes.
        assert_eq!(p2.boundary(EdgeTag::GammaP).len(), 14);
        for &d in p2.boundary(EdgeTag::Gamma0) {
            let x = p2.nodes[d][0];
            assert!(x == 0.0 || x == 1.0);
        }
    }

    #[test]
    fn partition_of_unity() {
        let geo = ElementGeometry::from_points([[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]]);
        let l = [0.2, 0.5, 0.3];
        for n in [3, 6] {
            let v = basis_values(n, &l);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let g = basis_gradients(n, &l, &geo);
            let sx: f64 = g.iter().map(|d| d[0]).sum();
            let sy: f64 = g.iter().map(|d| d[1]).sum();
            assert!(sx.abs() < 1e-13 && sy.abs() < 1e-13);
        }
    }
}
