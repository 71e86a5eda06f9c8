//! Scenario driver: equilibrium, stability gate, time loop, postprocessing and manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{RawConfig, RunConfig};
use crate::dynamics::{build_extensions, energy, energy_residual, initial_state, ForcingTerms, Stepper, Variant};
use crate::equilibrium::{solve_spherical, EquilibriumState};
use crate::error::{GelError, Result};
use crate::material::{effective_moduli, EffectiveModuli};
use crate::mesh::Mesh;
use crate::postprocess::{debonding_report, export_fields, num, stress_field, DebondReport, StressField};
use crate::stability::{check_equilibrium, check_spherical, SphericalCheck};

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub equilibrium_s: f64,
    pub assembly_s: f64,
    pub time_loop_s: f64,
    pub postprocess_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub f0: f64,
    pub phi0: f64,
    pub moduli: EffectiveModuli,
    pub spherical: SphericalCheck,
    pub general_ok: bool,
    pub steps: usize,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_energy_residual: f64,
    /// Extremes of the final stress, in units of μ_E.
    pub max_abs_sxx: f64,
    pub max_abs_syy: f64,
    pub max_abs_sxy: f64,
    pub max_syy_cell: usize,
    pub max_syy_at_gamma0: bool,
    pub interior_median_abs_syy: f64,
    /// Net Γ₀ reaction of the last step, units of μ_E times length.
    pub reaction: [f64; 2],
    /// ∫∇·u₀, the defect of the impermeable viscous compatibility condition.
    pub initial_mean_divergence: f64,
    pub debond: DebondReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: RawConfig,
    pub resolved: RunConfig,
    pub hash: String,
    pub outputs: Vec<PathBuf>,
    pub timings: Timings,
    pub summary: Summary,
}

/// Content hash of the resolved inputs in the style of a git blob, SHA-256.
pub fn config_hash(c: &RunConfig) -> Result<String> {
    let body = serde_json::to_string(c).map_err(|e| GelError::Config(e.to_string()))?;
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    Ok(h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Everything a run produces besides files.
pub struct RunResult {
    pub equilibrium: EquilibriumState,
    pub mesh: Mesh,
    pub stress: StressField,
    pub manifest: RunManifest,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| GelError::io(path, e))
}

pub fn run_scenario(raw: &RawConfig, out: &Path) -> Result<RunManifest> {
    run_scenario_full(raw, out).map(|r| r.manifest)
}

pub fn run_scenario_full(raw: &RawConfig, out: &Path) -> Result<RunResult> {
    let start = Instant::now();
    let cfg = raw.resolve()?;
    let hash = config_hash(&cfg)?;
    let sc = &cfg.scenario;
    let eq = solve_spherical(&sc.params)?;
    let moduli = effective_moduli(eq.f0, eq.phi0, &sc.params)?;
    let spherical = check_spherical(&moduli);
    if !spherical.ok {
        return Err(GelError::StabilityGate(format!(
            "f0 = {}: mu_t = {:.6e}, 3 lambda_t + 2 mu_t = {:.6e}",
            eq.f0, spherical.mu_t_margin, spherical.bulk_margin
        )));
    }
    let general_ok = check_equilibrium(eq.f0, &sc.params).map(|r| r.general_ok).unwrap_or(false);
    let t_eq = start.elapsed().as_secs_f64();

    let mesh = Mesh::unit_square(sc.level)?;
    let stepper = Stepper::new(sc, &mesh, &eq)?;
    let ext = build_extensions(sc, &mesh)?;
    let forcing = ForcingTerms { variant: sc.variant, p0: sc.p0, phi0: eq.phi0, kappa_perm: moduli.kappa_perm, ext };
    let loads = forcing.loads(&mesh, &stepper.vspace, &stepper.pspace)?;
    let t_asm = start.elapsed().as_secs_f64() - t_eq;

    std::fs::create_dir_all(out).map_err(|e| GelError::io(out, e))?;
    let mut outputs = Vec::new();
    let f_init = sc.f0_override.unwrap_or(eq.f0);
    let mut prev = initial_state(&stepper, f_init)?;
    let initial_mean_divergence: f64 = stepper.ops.b.matvec(&prev.u).iter().sum();
    let initial_energy = energy(&stepper, &prev);
    let mut csv = format!(
        "# scales: stress {} Pa, time {} s, length {} m\nstep,t,energy,dissipation,work,residual\n",
        num(cfg.scales.stress),
        num(cfg.scales.time),
        num(cfg.scales.length)
    );
    let _ = writeln!(csv, "0,{},{},{},{},{}", num(0.0), num(initial_energy), num(0.0), num(0.0), num(0.0));
    let mut max_res = f64::NEG_INFINITY;
    let mut last_prev = prev.clone();
    for k in 1..=sc.n_steps {
        let next = stepper.step(&prev, &loads).map_err(|e| match e {
            GelError::SingularMatrix { pivot, .. } => GelError::SingularMatrix { pivot, step: Some(k) },
            other => other,
        })?;
        let rec = energy_residual(&stepper, k, &prev, &next, &loads);
        max_res = max_res.max(rec.residual);
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{}",
            num(rec.t),
            num(rec.energy),
            num(rec.dissipation),
            num(rec.work),
            num(rec.residual)
        );
        if cfg.si.snapshot_every > 0 && k % cfg.si.snapshot_every == 0 && k != sc.n_steps {
            let s = stress_field(&stepper, &mesh, &next, Some(&prev), &forcing.ext.p)?;
            let p = export_fields(&next, &s, &mesh, &out.join(format!("snap_{k:06}")))?;
            outputs.extend([p.vtk, p.nodes_csv, p.cells_csv]);
        }
        last_prev = std::mem::replace(&mut prev, next);
    }
    let t_loop = start.elapsed().as_secs_f64() - t_eq - t_asm;

    let stress = stress_field(&stepper, &mesh, &prev, Some(&last_prev), &forcing.ext.p)?;
    let p = export_fields(&prev, &stress, &mesh, &out.join(format!("snap_{:06}", sc.n_steps)))?;
    outputs.extend([p.vtk, p.nodes_csv, p.cells_csv]);
    let energy_path = out.join("energy.csv");
    write(&energy_path, &csv)?;
    outputs.push(energy_path);

    let amax = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (max_cell, max_syy) = stress.max_abs_syy();
    let interior: Vec<f64> =
        (0..mesh.triangles.len()).filter(|&t| mesh.is_interior_cell(t)).map(|t| stress.syy[t].abs()).collect();
    let summary = Summary {
        f0: eq.f0,
        phi0: eq.phi0,
        moduli,
        spherical,
        general_ok,
        steps: sc.n_steps,
        final_time: prev.t,
        initial_energy,
        final_energy: energy(&stepper, &prev),
        max_energy_residual: max_res,
        max_abs_sxx: amax(&stress.sxx),
        max_abs_syy: max_syy,
        max_abs_sxy: amax(&stress.sxy),
        max_syy_cell: max_cell,
        max_syy_at_gamma0: mesh.gamma0_adjacent(max_cell),
        interior_median_abs_syy: median(interior),
        reaction: stepper.reaction(&last_prev, &prev, &loads),
        initial_mean_divergence,
        debond: debonding_report(&stress, &mesh, 1.0),
    };
    let t_total = start.elapsed().as_secs_f64();
    let outputs = outputs.into_iter().map(|p| p.strip_prefix(out).map(Path::to_path_buf).unwrap_or(p)).collect();
    let mut manifest = RunManifest {
        config: raw.with_preset()?,
        resolved: cfg,
        hash,
        outputs,
        timings: Timings {
            equilibrium_s: t_eq,
            assembly_s: t_asm,
            time_loop_s: t_loop,
            postprocess_s: 0.0,
            total_s: 0.0,
        },
        summary,
    };
    manifest.timings.postprocess_s = start.elapsed().as_secs_f64() - t_eq - t_asm - t_loop;
    manifest.timings.total_s = t_total.max(start.elapsed().as_secs_f64());
    let mpath = out.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| GelError::Config(e.to_string()))?;
    write(&mpath, &(body + "\n"))?;
    Ok(RunResult { equilibrium: eq, mesh, stress, manifest })
}

/// Worker count for sweeps: `GELSIM_THREADS` if set and positive, else rayon's default.
pub fn sweep_threads() -> Option<usize> {
    std::env::var("GELSIM_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

#[derive(Debug)]
pub struct SweepEntry {
    pub label: String,
    pub result: Result<RunManifest>,
}

/// Runs `base` once per value of `key`, each into `out/<key>_<index>`.
pub fn sweep(base: &RawConfig, key: &str, values: &[Value], out: &Path, threads: Option<usize>) -> Result<Vec<SweepEntry>> {
    let configs: Vec<(String, RawConfig)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| Ok((format!("{key}_{i:03}"), base.set_key(key, v.clone())?)))
        .collect::<Result<_>>()?;
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| GelError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        configs
            .par_iter()
            .map(|(label, c)| SweepEntry { label: label.clone(), result: run_scenario(c, &out.join(label)) })
            .collect()
    }))
}

/// Variant-matched copy used for permeability comparisons.
pub fn with_variant(raw: &RawConfig, v: Variant) -> RawConfig {
    RawConfig { variant: Some(v.name().to_string()), ..raw.clone() }
}
