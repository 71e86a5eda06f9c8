//! Stress-free spherical equilibrium B = f₀²I.

use serde::Serialize;

use crate::error::{check_fraction, GelError, Result};
use crate::material::{osmotic_pressure, stress_coefficients, MaterialParams};

pub const GRID_POINTS: usize = 10_000;
pub const PHI_LO: f64 = 1e-4;
pub const PHI_HI: f64 = 1.0 - 1e-4;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Diagnostic {
    /// More than one sign change of the residual; all bracketed roots listed.
    MultipleRoots(Vec<f64>),
    /// κ changes sign at this volume fraction.
    PhiStar(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumState {
    pub f0: f64,
    pub phi0: f64,
    pub i1: f64,
    pub i3: f64,
    pub residual: f64,
    pub kappa0: f64,
    pub nu0: f64,
    pub diagnostics: Vec<Diagnostic>,
}

fn residual_unchecked(phi: f64, p: &MaterialParams) -> Result<f64> {
    let pi = osmotic_pressure(phi, p)?.pi;
    let x = phi / p.phi_i;
    Ok(pi / (p.mu_e * phi) + p.alpha * x.powf(2.0 * p.r)
        - p.a3 * x.powf(-2.0 * p.q_exp)
        - p.a1 * 3f64.powf(p.s - 1.0) * x.powf(-2.0 * p.s / 3.0))
}

/// Left side minus right side of the scalar equilibrium equation
/// π/(μ_Eφ) + α(φ/φ_I)^{2r} − a₃(φ_I/φ)^{2q} = a₁3^{s−1}(φ_I/φ)^{2s/3}.
pub fn equilibrium_residual(phi: f64, params: &MaterialParams) -> Result<f64> {
    check_fraction("phi", phi)?;
    residual_unchecked(phi, params)
}

/// d(residual)/dφ in closed form.
pub fn equilibrium_residual_derivative(phi: f64, p: &MaterialParams) -> Result<f64> {
    check_fraction("phi", phi)?;
    let op = osmotic_pressure(phi, p)?;
    let pi_term = (op.pi12 * phi - op.pi) / (p.mu_e * phi * phi);
    let x = phi / p.phi_i;
    let a_term = p.alpha * 2.0 * p.r * x.powf(2.0 * p.r) / phi;
    let q_term = p.a3 * 2.0 * p.q_exp * x.powf(-2.0 * p.q_exp) / phi;
    let s_term = p.a1 * 3f64.powf(p.s - 1.0) * (2.0 * p.s / 3.0) * x.powf(-2.0 * p.s / 3.0) / phi;
    Ok(pi_term + a_term + q_term + s_term)
}

/// κ along the spherical family parametrized by φ.
pub fn kappa_of_phi(phi: f64, p: &MaterialParams) -> Result<f64> {
    let pi = osmotic_pressure(phi, p)?.pi;
    let x = phi / p.phi_i;
    Ok(pi / (p.mu_e * phi) + p.alpha * x.powf(2.0 * p.r) - p.a3 * x.powf(-2.0 * p.q_exp))
}

pub fn grid(n: usize) -> impl Iterator<Item = f64> {
    let h = (PHI_HI - PHI_LO) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { PHI_HI } else { PHI_LO + h * i as f64 })
}

fn bisect(mut lo: f64, mut hi: f64, p: &MaterialParams) -> Result<f64> {
    let mut f_lo = residual_unchecked(lo, p)?;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = residual_unchecked(mid, p)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign-change brackets of the residual on the uniform search grid.
pub fn brackets(p: &MaterialParams) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for phi in grid(GRID_POINTS) {
        let r = residual_unchecked(phi, p)?;
        if let Some((pp, pr)) = prev {
            if r == 0.0 || (pr != 0.0 && (r < 0.0) != (pr < 0.0)) {
                out.push((pp, phi));
            }
        }
        prev = Some((phi, r));
    }
    Ok(out)
}

/// Root by pure bisection of the first bracket; used as an oracle.
pub fn bisection_root(p: &MaterialParams) -> Result<f64> {
    let b = brackets(p)?;
    let &(lo, hi) = b.first().ok_or(GelError::NoBracket)?;
    bisect(lo, hi, p)
}

pub fn solve_spherical(params: &MaterialParams) -> Result<EquilibriumState> {
    params.validate()?;
    let b = brackets(params)?;
    let &(lo, hi) = b.first().ok_or(GelError::NoBracket)?;
    let mut diagnostics = Vec::new();
    if b.len() > 1 {
        let roots = b.iter().map(|&(l, h)| bisect(l, h, params)).collect::<Result<Vec<_>>>()?;
        diagnostics.push(Diagnostic::MultipleRoots(roots));
    }
    let mut phi = bisect(lo, hi, params)?;
    for _ in 0..2 {
        let r = residual_unchecked(phi, params)?;
        let d = equilibrium_residual_derivative(phi, params)?;
        let next = phi - r / d;
        if next > lo && next < hi && d.is_finite() && d != 0.0 {
            let r_next = residual_unchecked(next, params)?;
            if r_next.abs() <= r.abs() {
                phi = next;
            }
        }
    }
    if let Some(ps) = phi_star(params)? {
        diagnostics.push(Diagnostic::PhiStar(ps));
    }
    let residual = residual_unchecked(phi, params)?;
    let f0 = (params.phi_i / phi).cbrt();
    let i1 = 3.0 * f0 * f0;
    let i3 = f0.powi(6);
    let sc = stress_coefficients(i1, i3, phi, params)?;
    if !(sc.kappa > 0.0) {
        return Err(GelError::InvalidParams(format!("kappa0 = {} is not positive at the root", sc.kappa)));
    }
    Ok(EquilibriumState { f0, phi0: phi, i1, i3, residual, kappa0: sc.kappa, nu0: sc.nu, diagnostics })
}

/// First sign change of κ(φ) on the search grid, refined by bisection.
pub fn phi_star(p: &MaterialParams) -> Result<Option<f64>> {
    let mut prev: Option<(f64, f64)> = None;
    for phi in grid(GRID_POINTS) {
        let k = kappa_of_phi(phi, p)?;
        if let Some((pp, pk)) = prev {
            if (k < 0.0) != (pk < 0.0) {
                let (mut lo, mut hi) = (pp, phi);
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    if (kappa_of_phi(mid, p)? < 0.0) == (pk < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
        }
        prev = Some((phi, k));
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Uniqueness {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// α/φ_I > a₁3^{s−1}φ_I^{2s/3} + a₃φ_I^{2q} + (c + b − a)/μ_E, with the
/// mixing coefficients converted to stress units through `fh_scale`.
pub fn uniqueness_condition(p: &MaterialParams) -> Uniqueness {
    let lhs = p.alpha / p.phi_i;
    let rhs = p.a1 * 3f64.powf(p.s - 1.0) * p.phi_i.powf(2.0 * p.s / 3.0)
        + p.a3 * p.phi_i.powf(2.0 * p.q_exp)
        + p.fh_scale * (p.c + p.b - p.a) / p.mu_e;
    Uniqueness { holds: lhs > rhs, lhs, rhs }
}

/// Parameter set whose equilibrium is f₀ = 1, φ₀ = φ_I = 1/2.
pub fn constructed_params() -> MaterialParams {
    MaterialParams {
        a: 1.0,
        b: 1.0,
        c: 0.0,
        chi: 0.0,
        fh_scale: 1.0,
        mu_e: 1.0,
        a1: 1.0,
        a3: 1.0,
        alpha: 2.0 - 2.0 * 2f64.ln(),
        s: 1.0,
        q_exp: 1.0,
        r: 1.0,
        phi_i: 0.5,
        ..MaterialParams::default()
    }
}
