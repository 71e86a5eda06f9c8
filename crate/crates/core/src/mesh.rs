//! Structured triangulations of the unit square.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{GelError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeTag {
    Interior,
    /// Displacement boundary {x = 0} ∪ {x = 1}.
    Gamma0,
    /// Pressure boundary {y = 0} ∪ {y = 1}.
    GammaP,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub v: [usize; 2],
    pub tag: EdgeTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Edge indices of (v0,v1), (v1,v2), (v2,v0) for each triangle.
    pub tri_edges: Vec<[usize; 3]>,
    pub level: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TagStats {
    pub interior: usize,
    pub gamma0: usize,
    pub gamma_p: usize,
}

const EPS: f64 = 1e-12;

fn on_gamma0(p: [f64; 2]) -> bool {
    p[0].abs() < EPS || (p[0] - 1.0).abs() < EPS
}

fn on_gamma_p(p: [f64; 2]) -> bool {
    p[1].abs() < EPS || (p[1] - 1.0).abs() < EPS
}

impl Mesh {
    /// Uniform (2^k+1)² lattice, every cell cut along its lower-left to
    /// upper-right diagonal.
    pub fn unit_square(level: u32) -> Result<Mesh> {
        if !(1..=10).contains(&level) {
            return Err(GelError::MeshLevel(level));
        }
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let x = if i == n { 1.0 } else { i as f64 * h };
                let y = if j == n { 1.0 } else { j as f64 * h };
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Ok(Self::from_parts(vertices, triangles, level))
    }

    /// Builds edges and tags from vertices and counter-clockwise triangles.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, level: u32) -> Mesh {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut count: Vec<u8> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(Edge { v: [key.0, key.1], tag: EdgeTag::Interior });
                    count.push(0);
                    edges.len() - 1
                });
                count[e] += 1;
                te[k] = e;
            }
            tri_edges.push(te);
        }
        for (e, c) in edges.iter_mut().zip(&count) {
            if *c == 1 {
                let (p, q) = (vertices[e.v[0]], vertices[e.v[1]]);
                e.tag = if (p[0] - q[0]).abs() < EPS && on_gamma0(p) {
                    EdgeTag::Gamma0
                } else if (p[1] - q[1]).abs() < EPS && on_gamma_p(p) {
                    EdgeTag::GammaP
                } else {
                    EdgeTag::Interior
                };
            }
        }
        Mesh { vertices, triangles, edges, tri_edges, level }
    }

    /// Reflection x → 1 − x with orientation restored.
    pub fn mirrored_x(&self) -> Mesh {
        let vertices = self.vertices.iter().map(|p| [1.0 - p[0], p[1]]).collect();
        let triangles = self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect();
        Mesh::from_parts(vertices, triangles, self.level)
    }

    pub fn h(&self) -> f64 {
        1.0 / (1usize << self.level) as f64
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn vertex_on_gamma0(&self, v: usize) -> bool {
        on_gamma0(self.vertices[v])
    }

    pub fn vertex_on_boundary(&self, v: usize) -> bool {
        let p = self.vertices[v];
        on_gamma0(p) || on_gamma_p(p)
    }

    /// Vertices of the closure of the pressure boundary (corners included).
    pub fn vertex_on_gamma_p_closure(&self, v: usize) -> bool {
        on_gamma_p(self.vertices[v])
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.tag != EdgeTag::Interior)
    }

    /// Counts of boundary edges per tag. A boundary edge (one adjacent
    /// triangle) that received no tag is an internal consistency error.
    pub fn classify_boundary(&self) -> Result<TagStats> {
        let mut count = vec![0u8; self.edges.len()];
        for te in &self.tri_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        let mut stats = TagStats { interior: 0, gamma0: 0, gamma_p: 0 };
        for (e, c) in self.edges.iter().zip(&count) {
            match (e.tag, *c) {
                (EdgeTag::Interior, 2) => stats.interior += 1,
                (EdgeTag::Interior, _) => {
                    return Err(GelError::MeshConsistency(format!("untagged boundary edge {:?}", e.v)))
                }
                (EdgeTag::Gamma0, 1) => stats.gamma0 += 1,
                (EdgeTag::GammaP, 1) => stats.gamma_p += 1,
                _ => return Err(GelError::MeshConsistency(format!("tagged interior edge {:?}", e.v))),
            }
        }
        Ok(stats)
    }

    /// Outward unit normal of a boundary edge.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].v.map(|v| self.vertices[v]);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
        let len = tx.hypot(ty);
        let mut n = [ty / len, -tx / len];
        let toward_center = (0.5 - mid[0]) * n[0] + (0.5 - mid[1]) * n[1];
        if toward_center > 0.0 {
            n = [-n[0], -n[1]];
        }
        n
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in &self.triangles {
            let p = t.map(|v| self.vertices[v]);
            for k in 0..3 {
                let (o, a, b) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [a[0] - o[0], a[1] - o[1]];
                let w = [b[0] - o[0], b[1] - o[1]];
                let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Triangles with at least one vertex on Γ₀.
    pub fn gamma0_adjacent(&self, t: usize) -> bool {
        self.triangles[t].iter().any(|&v| self.vertex_on_gamma0(v))
    }

    /// Triangles with no vertex on ∂Ω.
    pub fn is_interior_cell(&self, t: usize) -> bool {
        !self.triangles[t].iter().any(|&v| self.vertex_on_boundary(v))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.triangles[t].map(|v| self.vertices[v]);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }
}
