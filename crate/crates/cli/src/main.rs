use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gelsim::config::{parse_config, preset, RawConfig};
use gelsim::equilibrium::{constructed_params, solve_spherical, uniqueness_condition};
use gelsim::postprocess::{num, pi_curve, pi_curve_csv};
use gelsim::run::{run_scenario, sweep, sweep_threads};
use gelsim::stability::check_equilibrium;
use gelsim::{GelError, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gelsim", version, about = "Linearized gel mechanics simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat JSON configuration file (SI units).
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig1 or fig2.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the stress-free spherical equilibrium.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        /// Use the analytically constructed parameter set with f0 = 1.
        #[arg(long)]
        constructed: bool,
    },
    /// Print stability margins at the equilibrium, optionally over a chi grid.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Comma-separated chi values; writes one CSV row each.
        #[arg(long, value_delimiter = ',')]
        chi_grid: Vec<f64>,
    },
    /// Tabulate the osmotic pressure and its derivative.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Additional chi values.
        #[arg(long = "chi-list", value_delimiter = ',')]
        chi_list: Vec<f64>,
        #[arg(long, default_value_t = 99)]
        points: usize,
    },
    /// Run one scenario.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario once per value of one configuration key.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        /// Comma-separated JSON values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn load(c: &Common) -> Result<RawConfig> {
    let mut raw = match &c.config {
        Some(p) => parse_config(p)?,
        None => RawConfig::default(),
    };
    if let Some(name) = &c.preset {
        raw = preset(name)?.overlay(&RawConfig { preset: None, ..raw })?;
    }
    let flags = RawConfig {
        variant: c.variant.clone(),
        level: c.level,
        n_steps: c.steps,
        dt: c.dt,
        chi: c.chi,
        ..RawConfig::default()
    };
    raw.overlay(&flags)
}

/// Resolves `raw` with a placeholder variant for commands that do not step in time.
fn static_params(raw: &RawConfig) -> Result<gelsim::config::RunConfig> {
    let mut r = raw.clone();
    r.variant.get_or_insert_with(|| "inviscid-impermeable".into());
    r.resolve()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(d) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(d).map_err(|e| GelError::Io { path: d.into(), source: e })?;
            }
            std::fs::write(p, text).map_err(|e| GelError::Io { path: p.into(), source: e })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

fn execute(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Equilibrium { common, constructed } => {
            let params = if constructed { constructed_params() } else { static_params(&load(&common)?)?.scenario.params };
            let eq = solve_spherical(&params)?;
            let u = uniqueness_condition(&params);
            emit(common.out.as_deref(), &pretty(&json!({ "equilibrium": eq, "uniqueness": u })))
        }
        Cmd::Stability { common, chi_grid } => {
            let raw = load(&common)?;
            if chi_grid.is_empty() {
                let params = static_params(&raw)?.scenario.params;
                let eq = solve_spherical(&params)?;
                let r = check_equilibrium(eq.f0, &params)?;
                let v = json!({ "f0": eq.f0, "phi0": eq.phi0, "spherical_ok": r.spherical_ok(), "report": r });
                emit(common.out.as_deref(), &pretty(&v))
            } else {
                let mut csv = String::from("chi,f0,phi0,spherical_ok,mu_t_margin,bulk_margin,general_ok,c2,c3,alpha1_margin,diag_margin\n");
                for chi in chi_grid {
                    let params = static_params(&raw.overlay(&RawConfig { chi: Some(chi), ..RawConfig::default() })?)?.scenario.params;
                    let eq = solve_spherical(&params)?;
                    let r = check_equilibrium(eq.f0, &params)?;
                    let s = r.spherical.unwrap_or(gelsim::stability::SphericalCheck {
                        ok: false,
                        mu0: f64::NAN,
                        mu_t_margin: f64::NAN,
                        bulk_margin: f64::NAN,
                    });
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        num(chi),
                        num(eq.f0),
                        num(eq.phi0),
                        s.ok,
                        num(s.mu_t_margin),
                        num(s.bulk_margin),
                        r.general_ok,
                        num(r.c2),
                        num(r.c3),
                        num(r.alpha1_margin),
                        num(r.diag_margin)
                    ));
                }
                emit(common.out.as_deref(), &csv)
            }
        }
        Cmd::Curve { common, chi_list, points } => {
            // chi values come from the flags here, not the config
            let raw = load(&Common { chi: None, ..common.clone() })?;
            let params = static_params(&raw)?.scenario.params;
            let mut chis: Vec<f64> = common.chi.into_iter().collect();
            chis.extend(chi_list);
            if chis.is_empty() {
                chis.push(params.chi);
            }
            let curves = pi_curve(&params, &chis, points)?;
            for c in &curves {
                eprintln!("chi = {}: monotonicity change {}", c.chi, if c.monotonicity_change { "FLAGGED" } else { "none" });
            }
            emit(common.out.as_deref(), &pi_curve_csv(&curves))
        }
        Cmd::Run { common } => {
            let raw = load(&common)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("gelsim-out"));
            let m = run_scenario(&raw, &out)?;
            let s = &m.summary;
            println!("hash {}", m.hash);
            println!("f0 {} phi0 {}", s.f0, s.phi0);
            println!("time scale {} s", m.resolved.scales.time);
            println!("final energy {:e}, max residual {:e}", s.final_energy, s.max_energy_residual);
            println!("max |syy| {:e} (cell {}, at gamma0: {})", s.max_abs_syy, s.max_syy_cell, s.max_syy_at_gamma0);
            println!("debond verdict {:?}", s.debond.verdict);
            println!("manifest {}", out.join("manifest.json").display());
            Ok(())
        }
        Cmd::Sweep { common, param, values } => {
            let raw = load(&common)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("gelsim-sweep"));
            let vals: Vec<Value> = values
                .iter()
                .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.clone())))
                .collect();
            let entries = sweep(&raw, &param, &vals, &out, sweep_threads())?;
            let mut first_err: Option<GelError> = None;
            for e in entries {
                match e.result {
                    Ok(m) => println!("{} ok hash {} final energy {:e}", e.label, m.hash, m.summary.final_energy),
                    Err(err) => {
                        println!("{} failed: {err}", e.label);
                        first_err.get_or_insert(err);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
