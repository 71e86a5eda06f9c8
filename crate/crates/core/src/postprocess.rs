//! Stress recovery, debonding thresholds, osmotic-pressure tables and field export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::{SimState, Stepper};
use crate::error::{GelError, Result};
use crate::fem::assembly::{scalar_at, vector_grad_at};
use crate::fem::quadrature::triangle6;
use crate::fem::space::ElementGeometry;
use crate::material::{osmotic_pressure, MaterialParams};
use crate::mesh::Mesh;

/// Per-element averages of the linearized total stress.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StressField {
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub sxy: Vec<f64>,
    pub includes_viscous: bool,
    pub t: f64,
}

impl StressField {
    pub fn zeros(n: usize) -> Self {
        StressField { sxx: vec![0.0; n], syy: vec![0.0; n], sxy: vec![0.0; n], includes_viscous: false, t: 0.0 }
    }

    pub fn max_abs_syy(&self) -> (usize, f64) {
        self.syy.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
    }
}

fn sym(g: [[f64; 2]; 2]) -> ([f64; 3], f64) {
    ([g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0])], g[0][0] + g[1][1])
}

/// T = 2μ̃D(u) + λ̃(∇·u)I + η₁D(u_t) + μ₁(∇·u_t)I + [η₂D(v₂) + μ₂(∇·v₂)I] − p̃I,
/// with u_t the backward difference against `prev`; omitting `prev` gives
/// the static stress. `p_ext` is the boundary-pressure extension added to
/// the computed pressure.
pub fn stress_field(
    stepper: &Stepper,
    mesh: &Mesh,
    state: &SimState,
    prev: Option<&SimState>,
    p_ext: &[f64],
) -> Result<StressField> {
    let (nu, np) = (stepper.n_u(), stepper.n_p());
    if stepper.vspace.dof_map.len() != mesh.triangles.len() || state.u.len() != nu || state.p.len() != np || p_ext.len() != np {
        return Err(GelError::DimensionMismatch("state, stepper and mesh disagree".into()));
    }
    if let Some(pr) = prev {
        if pr.u.len() != nu {
            return Err(GelError::DimensionMismatch("previous state on another mesh".into()));
        }
    }
    let m = &stepper.moduli;
    let par = &stepper.params;
    let ut: Option<Vec<f64>> = prev.map(|pr| state.u.iter().zip(&pr.u).map(|(a, b)| (a - b) / stepper.dt).collect());
    let v2 = state.v2.as_ref().filter(|_| stepper.variant.is_viscous());
    let n = mesh.triangles.len();
    let mut out = StressField::zeros(n);
    out.includes_viscous = ut.is_some() || v2.is_some();
    out.t = state.t;
    let quad = triangle6();
    for t in 0..n {
        let geo = ElementGeometry::new(mesh, t);
        let mut acc = [0.0; 3];
        for (l, w) in &quad {
            let (d, div) = sym(vector_grad_at(&stepper.vspace, &geo, &state.u, t, l));
            let mut s = [0.0; 3];
            for k in 0..3 {
                s[k] = 2.0 * m.mu_t * d[k];
            }
            s[0] += m.lambda_t * div;
            s[1] += m.lambda_t * div;
            if let Some(ut) = &ut {
                let (d, div) = sym(vector_grad_at(&stepper.vspace, &geo, ut, t, l));
                for k in 0..3 {
                    s[k] += par.eta1 * d[k];
                }
                s[0] += par.mu1 * div;
                s[1] += par.mu1 * div;
            }
            if let Some(v2) = v2 {
                let (d, div) = sym(vector_grad_at(&stepper.vspace, &geo, v2, t, l));
                for k in 0..3 {
                    s[k] += par.eta2 * d[k];
                }
                s[0] += par.mu2 * div;
                s[1] += par.mu2 * div;
            }
            let p = scalar_at(&stepper.pspace, &state.p, t, l) + scalar_at(&stepper.pspace, p_ext, t, l);
            s[0] -= p;
            s[1] -= p;
            for k in 0..3 {
                acc[k] += w * s[k];
            }
        }
        out.sxx[t] = acc[0];
        out.syy[t] = acc[1];
        out.sxy[t] = acc[2];
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Safe,
    Warning,
    Exceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DebondReport {
    pub max_boundary_pressure: f64,
    /// Centroid of the cell where the maximum occurs.
    pub location: [f64; 2],
    pub threshold_lo: f64,
    pub threshold_hi: f64,
    pub verdict: Verdict,
}

/// Largest normal-stress magnitude max(|σ_xx|, |σ_yy|) over cells touching
/// Γ₀, compared with [0.5 μ_E, 10 μ_E]. `mu_e` is in the units of the field.
pub fn debonding_report(field: &StressField, mesh: &Mesh, mu_e: f64) -> DebondReport {
    let mut best = (0.0, [0.0, 0.0]);
    for t in 0..mesh.triangles.len() {
        if !mesh.gamma0_adjacent(t) {
            continue;
        }
        let v = field.sxx[t].abs().max(field.syy[t].abs());
        if v > best.0 {
            best = (v, mesh.centroid(t));
        }
    }
    let (lo, hi) = (0.5 * mu_e, 10.0 * mu_e);
    let verdict = if best.0 < lo {
        Verdict::Safe
    } else if best.0 <= hi {
        Verdict::Warning
    } else {
        Verdict::Exceeded
    };
    DebondReport { max_boundary_pressure: best.0, location: best.1, threshold_lo: lo, threshold_hi: hi, verdict }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PiRow {
    pub phi: f64,
    pub pi: f64,
    pub pi12: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiCurve {
    pub chi: f64,
    pub rows: Vec<PiRow>,
    /// π fails to be increasing somewhere on the grid (π₁,₂ ≤ 0).
    pub monotonicity_change: bool,
}

/// Samples π and π₁,₂ on `n_points` equispaced φ ∈ [0.01, 0.99] for each χ,
/// keeping the chain lengths of `params`.
pub fn pi_curve(params: &MaterialParams, chi_list: &[f64], n_points: usize) -> Result<Vec<PiCurve>> {
    if n_points < 2 {
        return Err(GelError::InvalidParams(format!("n_points = {n_points} must be at least 2")));
    }
    chi_list
        .iter()
        .map(|&chi| {
            let p = MaterialParams { chi, c: chi / 2.0, ..params.clone() };
            let rows = (0..n_points)
                .map(|i| {
                    let phi = 0.01 + 0.98 * i as f64 / (n_points - 1) as f64;
                    let o = osmotic_pressure(phi, &p)?;
                    Ok(PiRow { phi, pi: o.pi, pi12: o.pi12 })
                })
                .collect::<Result<Vec<_>>>()?;
            let monotonicity_change = rows.iter().any(|r| r.pi12 <= 0.0);
            Ok(PiCurve { chi, rows, monotonicity_change })
        })
        .collect()
}

pub fn pi_curve_csv(curves: &[PiCurve]) -> String {
    let mut s = String::from("chi,phi,pi,pi12\n");
    for c in curves {
        for r in &c.rows {
            let _ = writeln!(s, "{},{},{},{}", num(c.chi), num(r.phi), num(r.pi), num(r.pi12));
        }
    }
    s
}

/// Fixed 17-significant-digit formatting.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExportPaths {
    pub vtk: PathBuf,
    pub nodes_csv: PathBuf,
    pub cells_csv: PathBuf,
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| GelError::io(path, e))
}

/// Writes `<stem>.vtk`, `<stem>_nodes.csv` and `<stem>_cells.csv`.
///
/// The VTK file holds the mesh vertices, triangle cells, point data u, p, q
/// (and v2) and cell data sxx, syy, sxy. The node table has one row per P2
/// node (vertices first) with the full displacement coefficients; p and q
/// at edge midpoints are the P1 interpolants.
pub fn export_fields(state: &SimState, stress: &StressField, mesh: &Mesh, stem: &Path) -> Result<ExportPaths> {
    let nv = mesh.vertices.len();
    let nt = mesh.triangles.len();
    let n_nodes = nv + mesh.edges.len();
    if state.u.len() != 2 * n_nodes || state.p.len() != nv || state.q.len() != nv || stress.sxx.len() != nt {
        return Err(GelError::DimensionMismatch("export: state does not match mesh".into()));
    }
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| GelError::io(dir, e))?;
    }
    let with_suffix = |s: &str| {
        let mut name = stem.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(s);
        stem.with_file_name(name)
    };
    let paths = ExportPaths { vtk: with_suffix(".vtk"), nodes_csv: with_suffix("_nodes.csv"), cells_csv: with_suffix("_cells.csv") };

    let mut v = String::new();
    v.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(v, "gelsim t={}", num(state.t));
    v.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(v, "POINTS {nv} double");
    for p in &mesh.vertices {
        let _ = writeln!(v, "{} {} 0", num(p[0]), num(p[1]));
    }
    let _ = writeln!(v, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(v, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(v, "CELL_TYPES {nt}");
    for _ in 0..nt {
        v.push_str("5\n");
    }
    let _ = writeln!(v, "POINT_DATA {nv}");
    v.push_str("VECTORS u double\n");
    for a in 0..nv {
        let _ = writeln!(v, "{} {} 0", num(state.u[a]), num(state.u[n_nodes + a]));
    }
    if let Some(w) = &state.v2 {
        v.push_str("VECTORS v2 double\n");
        for a in 0..nv {
            let _ = writeln!(v, "{} {} 0", num(w[a]), num(w[n_nodes + a]));
        }
    }
    for (name, data) in [("p", &state.p), ("q", &state.q)] {
        let _ = writeln!(v, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in data.iter() {
            let _ = writeln!(v, "{}", num(*x));
        }
    }
    let _ = writeln!(v, "CELL_DATA {nt}");
    for (name, data) in [("sxx", &stress.sxx), ("syy", &stress.syy), ("sxy", &stress.sxy)] {
        let _ = writeln!(v, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in data.iter() {
            let _ = writeln!(v, "{}", num(*x));
        }
    }
    write_file(&paths.vtk, &v)?;

    let mut c = String::from("node,x,y,ux,uy,p,q\n");
    for a in 0..n_nodes {
        let (x, p, q) = if a < nv {
            (mesh.vertices[a], state.p[a], state.q[a])
        } else {
            let [i, j] = mesh.edges[a - nv].v;
            let (xi, xj) = (mesh.vertices[i], mesh.vertices[j]);
            ([0.5 * (xi[0] + xj[0]), 0.5 * (xi[1] + xj[1])], 0.5 * (state.p[i] + state.p[j]), 0.5 * (state.q[i] + state.q[j]))
        };
        let _ = writeln!(c, "{a},{},{},{},{},{},{}", num(x[0]), num(x[1]), num(state.u[a]), num(state.u[n_nodes + a]), num(p), num(q));
    }
    write_file(&paths.nodes_csv, &c)?;

    let mut c = String::from("cell,v0,v1,v2,sxx,syy,sxy\n");
    for (k, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(c, "{k},{},{},{},{},{},{}", t[0], t[1], t[2], num(stress.sxx[k]), num(stress.syy[k]), num(stress.sxy[k]));
    }
    write_file(&paths.cells_csv, &c)?;
    Ok(paths)
}

/// Reads back the u, p and q coefficients from a node table.
pub fn read_nodes_csv(path: &Path, n_vertices: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| GelError::io(path, e))?;
    let parse = |s: &str| s.parse::<f64>().map_err(|e| GelError::Config(format!("{}: {e}", path.display())));
    let mut ux = Vec::new();
    let mut uy = Vec::new();
    let (mut p, mut q) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().skip(1).enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(GelError::Config(format!("{}: line {} has {} fields", path.display(), i + 2, f.len())));
        }
        ux.push(parse(f[3])?);
        uy.push(parse(f[4])?);
        if i < n_vertices {
            p.push(parse(f[5])?);
            q.push(parse(f[6])?);
        }
    }
    ux.extend(uy);
    Ok((ux, p, q))
}
