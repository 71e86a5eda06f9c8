//! Constitutive laws: Flory–Huggins mixing, Hadamard elasticity and the
//! coefficients of the stress linearized about a spherical state.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{check_fraction, GelError, Result};

/// All constitutive constants of the gel.
///
/// `a`, `b`, `c` are measured in units of `fh_scale`. Every other modulus is
/// in the same stress unit as `mu_e` (Pa, or 1 after nondimensionalization).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub chi: f64,
    pub fh_scale: f64,
    pub mu_e: f64,
    pub a1: f64,
    pub a3: f64,
    pub alpha: f64,
    pub s: f64,
    pub q_exp: f64,
    pub r: f64,
    pub phi_i: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta_drag: f64,
}

/// Chain lengths used when the mixing coefficients are built from `chi`.
pub const DEFAULT_N1: f64 = 100.0;
pub const DEFAULT_N2: f64 = 1.0;

impl Default for MaterialParams {
    /// Nondimensional defaults: unit elastic modulus and polymer viscosity,
    /// `chi = 0.5`, unit Hadamard constants.
    fn default() -> Self {
        let mut p = MaterialParams {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            chi: 0.5,
            fh_scale: 1.0,
            mu_e: 1.0,
            a1: 1.0,
            a3: 1.0,
            alpha: 1.0,
            s: 1.0,
            q_exp: 1.0,
            r: 1.0,
            phi_i: 0.5,
            eta1: 1.0,
            eta2: 0.1,
            mu1: 1.0,
            mu2: 0.1,
            beta_drag: 1.0,
        };
        p.set_flory(0.5, DEFAULT_N1, DEFAULT_N2);
        p
    }
}

impl MaterialParams {
    /// Sets `a = 1/N1`, `b = 1/N2`, `c = chi/2`.
    pub fn set_flory(&mut self, chi: f64, n1: f64, n2: f64) {
        self.chi = chi;
        self.a = 1.0 / n1;
        self.b = 1.0 / n2;
        self.c = 0.5 * chi;
    }

    pub fn with_flory(mut self, chi: f64, n1: f64, n2: f64) -> Self {
        self.set_flory(chi, n1, n2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GelError::InvalidParams(m.to_string()));
        let all = [
            self.a, self.b, self.c, self.chi, self.fh_scale, self.mu_e, self.a1, self.a3, self.alpha,
            self.s, self.q_exp, self.r, self.phi_i, self.eta1, self.eta2, self.mu1, self.mu2,
            self.beta_drag,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if !(self.phi_i > 0.0 && self.phi_i < 1.0) {
            return bad("phi_i must lie in (0,1)");
        }
        if self.mu_e <= 0.0 {
            return bad("mu_e must be positive");
        }
        if self.a1 <= 0.0 || self.a3 <= 0.0 || self.alpha <= 0.0 {
            return bad("a1, a3 and alpha must be positive");
        }
        if self.s < 1.0 || self.q_exp < 1.0 || self.r < 1.0 {
            return bad("exponents s, q and r must be at least 1");
        }
        if self.beta_drag <= 0.0 {
            return bad("beta_drag must be positive");
        }
        if self.eta1 < 0.0 || self.eta2 < 0.0 || self.mu1 < 0.0 || self.mu2 < 0.0 {
            return bad("viscosities must be nonnegative");
        }
        if self.fh_scale < 0.0 {
            return bad("fh_scale must be nonnegative");
        }
        Ok(())
    }

    pub fn hadamard(&self) -> Hadamard {
        Hadamard {
            mu_e: self.mu_e,
            a1: self.a1,
            a3: self.a3,
            alpha: self.alpha,
            s: self.s,
            q: self.q_exp,
            r: self.r,
        }
    }
}

/// Mixing energy and its partial derivatives, with φ₁ and φ₂ treated as
/// independent variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingEnergy {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

pub fn mixing_energy(phi1: f64, params: &MaterialParams) -> Result<MixingEnergy> {
    check_fraction("phi1", phi1)?;
    let phi2 = 1.0 - phi1;
    let (a, b, c) = (params.a, params.b, params.c);
    Ok(MixingEnergy {
        g: a * phi1 * phi1.ln() + b * phi2 * phi2.ln() + c * phi1 * phi2,
        g1: a * (phi1.ln() + 1.0) + c * phi2,
        g2: b * (phi2.ln() + 1.0) + c * phi1,
        g11: a / phi1,
        g12: c,
        g22: b / phi2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OsmoticPressure {
    pub pi: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub pi12: f64,
}

/// Osmotic pressure π = φ₁(G₁ − G₂) − G and its partials, scaled by `fh_scale`.
pub fn osmotic_pressure(phi1: f64, params: &MaterialParams) -> Result<OsmoticPressure> {
    let m = mixing_energy(phi1, params)?;
    let k = params.fh_scale;
    let pi1 = -m.g2 + phi1 * (m.g11 - m.g12);
    let pi2 = phi1 * (m.g12 - m.g22) - m.g2;
    let pi12 = params.a - params.b - 2.0 * params.c * phi1 + params.b / (1.0 - phi1);
    Ok(OsmoticPressure {
        pi: k * (phi1 * (m.g1 - m.g2) - m.g),
        pi1: k * pi1,
        pi2: k * pi2,
        pi12: k * pi12,
    })
}

/// An isotropic stored energy w(I₁, I₂, I₃) of the right Cauchy–Green tensor.
pub trait IsotropicEnergy {
    fn energy(&self, inv: [f64; 3]) -> Result<f64>;
    /// ∂w/∂I_m.
    fn grad(&self, inv: [f64; 3]) -> [f64; 3];
    /// ∂²w/∂I_m∂I_n.
    fn hessian(&self, inv: [f64; 3]) -> [[f64; 3]; 3];
}

/// w = (μ_E/2)(a₁I₁ˢ/s + αI₃⁻ʳ/r + a₃I₃^q/q).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hadamard {
    pub mu_e: f64,
    pub a1: f64,
    pub a3: f64,
    pub alpha: f64,
    pub s: f64,
    pub q: f64,
    pub r: f64,
}

impl IsotropicEnergy for Hadamard {
    fn energy(&self, inv: [f64; 3]) -> Result<f64> {
        let [i1, _, i3] = inv;
        if i1 <= 0.0 || !i1.is_finite() {
            return Err(GelError::Domain { what: "I1", value: i1 });
        }
        if i3 <= 0.0 || !i3.is_finite() {
            return Err(GelError::Domain { what: "I3", value: i3 });
        }
        Ok(0.5
            * self.mu_e
            * (self.a1 * i1.powf(self.s) / self.s
                + self.alpha * i3.powf(-self.r) / self.r
                + self.a3 * i3.powf(self.q) / self.q))
    }

    fn grad(&self, inv: [f64; 3]) -> [f64; 3] {
        let [i1, _, i3] = inv;
        let h = 0.5 * self.mu_e;
        [
            h * self.a1 * i1.powf(self.s - 1.0),
            0.0,
            h * (-self.alpha * i3.powf(-self.r - 1.0) + self.a3 * i3.powf(self.q - 1.0)),
        ]
    }

    fn hessian(&self, inv: [f64; 3]) -> [[f64; 3]; 3] {
        let [i1, _, i3] = inv;
        let h = 0.5 * self.mu_e;
        let w11 = h * self.a1 * (self.s - 1.0) * i1.powf(self.s - 2.0);
        let w33 = h
            * (self.alpha * (self.r + 1.0) * i3.powf(-self.r - 2.0)
                + self.a3 * (self.q - 1.0) * i3.powf(self.q - 2.0));
        [[w11, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, w33]]
    }
}

pub fn hadamard_energy(i1: f64, i3: f64, params: &MaterialParams) -> Result<f64> {
    params.hadamard().energy([i1, 0.0, i3])
}

/// Hadamard stress coefficients; σ̂ = β₀I + β₁B + β₂B².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StressCoefficients {
    pub nu: f64,
    pub kappa: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
}

pub fn stress_coefficients(
    i1: f64,
    i3: f64,
    phi1: f64,
    params: &MaterialParams,
) -> Result<StressCoefficients> {
    if i1 <= 0.0 {
        return Err(GelError::Domain { what: "I1", value: i1 });
    }
    if i3 <= 0.0 {
        return Err(GelError::Domain { what: "I3", value: i3 });
    }
    let op = osmotic_pressure(phi1, params)?;
    let nu = params.a1 * i1.powf(params.s - 1.0);
    let kappa = op.pi * i3.sqrt() / (params.mu_e * params.phi_i) + params.alpha * i3.powf(-params.r)
        - params.a3 * i3.powf(params.q_exp);
    let scale = params.phi_i * params.mu_e / i3.sqrt();
    Ok(StressCoefficients { nu, kappa, beta0: -scale * kappa, beta1: scale * nu, beta2: 0.0 })
}

pub fn invariants(c: &Matrix3<f64>) -> [f64; 3] {
    let i1 = c.trace();
    let i2 = 0.5 * (i1 * i1 - (c * c).trace());
    [i1, i2, c.determinant()]
}

/// Smallest eigenvalue of the symmetric part of `c`.
pub(crate) fn min_sym_eigenvalue(c: &Matrix3<f64>) -> f64 {
    let sym = 0.5 * (c + c.transpose());
    sym.symmetric_eigenvalues().min()
}

/// The fourth-order tensor 𝔉 = 2∂²ŵ/∂C² at a fixed C₀, together with the
/// scalar coefficients of the second Piola–Kirchhoff representation
/// 𝒮 = 2∂ŵ/∂C = 2(α₁I + α₂C + α₀C⁻¹).
#[derive(Clone, Debug)]
pub struct ElasticityTensor {
    pub c: Matrix3<f64>,
    pub c_inv: Matrix3<f64>,
    pub inv: [f64; 3],
    /// [α₀, α₁, α₂].
    pub alpha: [f64; 3],
    /// `dalpha[n][m]` = ∂α_n/∂I_m (m = 0,1,2 for I₁,I₂,I₃).
    pub dalpha: [[f64; 3]; 3],
    /// 𝒜_m = Σ_n ∂α_n/∂I_m.
    pub a_sums: [f64; 3],
    /// ∂w/∂I_m and ∂²w/∂I_m∂I_n at C₀.
    pub w_grad: [f64; 3],
    pub w_hess: [[f64; 3]; 3],
    /// π₁,₂ at the supplied volume fraction.
    pub pi12: f64,
}

impl ElasticityTensor {
    pub fn new<E: IsotropicEnergy>(energy: &E, c0: &Matrix3<f64>, pi12: f64) -> Result<Self> {
        let asym = (c0 - c0.transpose()).norm();
        if asym > 1e-12 * c0.norm().max(1.0) {
            return Err(GelError::NonSpd { min_eig: f64::NAN });
        }
        let min_eig = min_sym_eigenvalue(c0);
        if !(min_eig > 0.0) {
            return Err(GelError::NonSpd { min_eig });
        }
        let c = 0.5 * (c0 + c0.transpose());
        let c_inv = c.try_inverse().ok_or(GelError::NonSpd { min_eig })?;
        let inv = invariants(&c);
        let [i1, _, i3] = inv;
        let g = energy.grad(inv);
        let h = energy.hessian(inv);
        let alpha = [i3 * g[2], g[0] + i1 * g[1], -g[1]];
        let mut dalpha = [[0.0; 3]; 3];
        for m in 0..3 {
            let delta = |k: usize| if k == m { 1.0 } else { 0.0 };
            dalpha[0][m] = delta(2) * g[2] + i3 * h[2][m];
            dalpha[1][m] = h[0][m] + delta(0) * g[1] + i1 * h[1][m];
            dalpha[2][m] = -h[1][m];
        }
        let mut a_sums = [0.0; 3];
        for (m, s) in a_sums.iter_mut().enumerate() {
            *s = (0..3).map(|n| dalpha[n][m]).sum();
        }
        Ok(ElasticityTensor { c, c_inv, inv, alpha, dalpha, a_sums, w_grad: g, w_hess: h, pi12 })
    }

    /// 𝒮 = 2(α₁I + α₂C + α₀C⁻¹).
    pub fn pk2(&self) -> Matrix3<f64> {
        let [a0, a1, a2] = self.alpha;
        2.0 * (Matrix3::identity() * a1 + self.c * a2 + self.c_inv * a0)
    }

    /// 𝔉A for a symmetric direction A.
    pub fn apply(&self, a: &Matrix3<f64>) -> Matrix3<f64> {
        let [i1, _, i3] = self.inv;
        let tr = a.trace();
        let d_inv = [tr, i1 * tr - self.c.component_mul(a).sum(), i3 * self.c_inv.component_mul(a).sum()];
        let mut d_alpha = [0.0; 3];
        for (n, d) in d_alpha.iter_mut().enumerate() {
            *d = (0..3).map(|m| self.dalpha[n][m] * d_inv[m]).sum();
        }
        let [a0, _, a2] = self.alpha;
        2.0 * (Matrix3::identity() * d_alpha[1] + self.c * d_alpha[2] + a * a2 + self.c_inv * d_alpha[0]
            - self.c_inv * a * self.c_inv * a0)
    }
}

/// 𝔉(C₀) for the Hadamard energy of `params`; `phi1` feeds π₁,₂.
pub fn general_elasticity(
    c0: &Matrix3<f64>,
    phi1: f64,
    params: &MaterialParams,
) -> Result<ElasticityTensor> {
    let op = osmotic_pressure(phi1, params)?;
    ElasticityTensor::new(&params.hadamard(), c0, op.pi12)
}

/// λ, μ such that 𝔉A = λ tr(A) I + 2μA at C₀ = f²I.
pub fn spherical_lame(f: f64, params: &MaterialParams) -> Result<(f64, f64)> {
    if !(f > 0.0) {
        return Err(GelError::Domain { what: "f0", value: f });
    }
    let c0 = Matrix3::identity() * (f * f);
    let t = ElasticityTensor::new(&params.hadamard(), &c0, 0.0)?;
    let f2 = f * f;
    let coef = [f2.recip(), 1.0, f2];
    let mut lambda = 0.0;
    for n in 0..3 {
        let d = &t.dalpha[n];
        lambda += coef[n] * (d[0] + 2.0 * f2 * d[1] + f2 * f2 * d[2]);
    }
    let [a0, _, a2] = t.alpha;
    Ok((2.0 * lambda, a2 - a0 / (f2 * f2)))
}

/// Coefficients of the stress linearized about the spherical state, with the
/// convention 𝒯 = 2μ̃D(u) + λ̃(∇·u)I.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModuli {
    pub lambda_t: f64,
    pub mu_t: f64,
    pub lambda_iso: f64,
    pub mu_iso: f64,
    pub kappa_perm: f64,
}

pub fn effective_moduli(f0: f64, phi0: f64, params: &MaterialParams) -> Result<EffectiveModuli> {
    check_fraction("phi0", phi0)?;
    if !(f0 > 0.0) {
        return Err(GelError::Domain { what: "f0", value: f0 });
    }
    let expected = params.phi_i / f0.powi(3);
    if (expected - phi0).abs() > 1e-8 * phi0 {
        return Err(GelError::InvalidParams(format!(
            "phi0 = {phi0} inconsistent with phi_I f0^-3 = {expected}"
        )));
    }
    let (lambda_iso, mu_iso) = spherical_lame(f0, params)?;
    let op = osmotic_pressure(phi0, params)?;
    let t = ElasticityTensor::new(&params.hadamard(), &(Matrix3::identity() * (f0 * f0)), op.pi12)?;
    let [a0, a1, a2] = t.alpha;
    let f2 = f0 * f0;
    let lambda_t = (phi0 * (op.pi1 - op.pi2) - op.pi) / f0 + 2.0 * params.phi_i * lambda_iso;
    let mu_t = 2.0 * params.phi_i * (mu_iso + (a1 + a2 * f2 + a0 / f2) / f2);
    Ok(EffectiveModuli {
        lambda_t,
        mu_t,
        lambda_iso,
        mu_iso,
        kappa_perm: (1.0 - phi0).powi(2) / params.beta_drag,
    })
}

/// Reversible Cauchy-type stress φF𝒮Fᵀ − π(φ)I with φ = φ_I / det F.
pub fn reversible_stress(f: &Matrix3<f64>, params: &MaterialParams) -> Result<Matrix3<f64>> {
    let j = f.determinant();
    if !(j > 0.0) {
        return Err(GelError::Domain { what: "det F", value: j });
    }
    let phi = params.phi_i / j;
    let op = osmotic_pressure(phi, params)?;
    let t = ElasticityTensor::new(&params.hadamard(), &(f.transpose() * f), op.pi12)?;
    Ok(f * t.pk2() * f.transpose() * phi - Matrix3::identity() * op.pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> MaterialParams {
        MaterialParams { a: 1.0, b: 1.0, c: 0.0, fh_scale: 1.0, ..MaterialParams::default() }
    }

    #[test]
    fn mixing_examples() {
        let g = mixing_energy(0.5, &unit()).unwrap().g;
        assert!((g + 2f64.ln()).abs() < 1e-15);
        let p = MaterialParams { a: 0.0, b: 0.0, c: 1.0, ..unit() };
        assert!((mixing_energy(0.5, &p).unwrap().g - 0.25).abs() < 1e-15);
        let p = MaterialParams { a: 1.0, b: 2.0, c: 0.5, ..unit() };
        let g = mixing_energy(0.3, &p).unwrap().g;
        assert!((g + 0.755536).abs() < 1e-6, "{g}");
        assert!(mixing_energy(0.0, &p).is_err());
        assert!(mixing_energy(1.0, &p).is_err());
    }

    #[test]
    fn osmotic_examples() {
        let op = osmotic_pressure(0.5, &unit()).unwrap();
        assert!((op.pi - 2f64.ln()).abs() < 1e-14);
        assert!((op.pi12 - 2.0).abs() < 1e-14);
        assert!((op.pi1 - op.pi2 - op.pi12).abs() < 1e-14);
        let p = MaterialParams { a: 0.3, b: 1.7, c: 0.9, ..unit() };
        let small = osmotic_pressure(1e-9, &p).unwrap().pi;
        assert!(small.abs() < 1e-6);
    }

    #[test]
    fn hadamard_examples() {
        let p = MaterialParams { mu_e: 2.0, ..MaterialParams::default() };
        assert!((hadamard_energy(3.0, 1.0, &p).unwrap() - 5.0).abs() < 1e-14);
        let p = MaterialParams { s: 2.0, ..p };
        assert!((hadamard_energy(3.0, 1.0, &p).unwrap() - 6.5).abs() < 1e-14);
        assert!(hadamard_energy(0.0, 1.0, &p).is_err());
        assert!(hadamard_energy(3.0, -1.0, &p).is_err());
    }

    #[test]
    fn stress_coefficient_examples() {
        let p = MaterialParams { a1: 0.7, ..MaterialParams::default() };
        let sc = stress_coefficients(5.0, 2.0, 0.4, &p).unwrap();
        assert!((sc.nu - 0.7).abs() < 1e-15);
        assert_eq!(sc.beta2, 0.0);
        let sc = stress_coefficients(3.0, 1.0, 1e-12, &p).unwrap();
        assert!((sc.kappa - (p.alpha - p.a3)).abs() < 1e-9);
    }

    #[test]
    fn beta_representation() {
        let p = MaterialParams { s: 2.5, r: 1.5, q_exp: 2.0, ..MaterialParams::default() };
        let f = Matrix3::new(1.1, 0.2, 0.0, -0.1, 0.9, 0.05, 0.0, 0.1, 1.2);
        let b = f * f.transpose();
        let [i1, _, i3] = invariants(&b);
        let phi = p.phi_i / i3.sqrt();
        let sc = stress_coefficients(i1, i3, phi, &p).unwrap();
        let from_beta = Matrix3::identity() * sc.beta0 + b * sc.beta1 + b * b * sc.beta2;
        let s = p.phi_i * p.mu_e / i3.sqrt();
        let direct = (b * sc.nu - Matrix3::identity() * sc.kappa) * s;
        assert!((from_beta - direct).norm() < 1e-14);
        let t = reversible_stress(&f, &p).unwrap();
        assert!((t - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn alpha_at_identity() {
        let p = MaterialParams { mu_e: 3.0, a3: 2.0, alpha: 0.5, ..MaterialParams::default() };
        let t = general_elasticity(&Matrix3::identity(), 0.5, &p).unwrap();
        assert!((t.alpha[0] - 0.5 * p.mu_e * (p.a3 - p.alpha)).abs() < 1e-14);
        assert_eq!(t.alpha[2], 0.0);
        assert_eq!(t.apply(&Matrix3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn rejects_non_spd() {
        let c = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 2.0));
        assert!(matches!(general_elasticity(&c, 0.5, &MaterialParams::default()), Err(GelError::NonSpd { .. })));
    }

    #[test]
    fn kappa_perm_closed_form() {
        let p = MaterialParams { beta_drag: 2.5, ..MaterialParams::default() };
        let f0: f64 = 1.1;
        let phi0 = p.phi_i / f0.powi(3);
        let m = effective_moduli(f0, phi0, &p).unwrap();
        assert_eq!(m.kappa_perm, (1.0 - phi0).powi(2) / 2.5);
    }
}
