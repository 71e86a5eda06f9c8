//! Coercivity certificates for spherical and general equilibrium states.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::error::{GelError, Result};
use crate::material::{effective_moduli, general_elasticity, EffectiveModuli, ElasticityTensor, MaterialParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphericalCheck {
    pub ok: bool,
    /// Minimum of λ̃(tr A)² + 2μ̃|A|² over unit symmetric A.
    pub mu0: f64,
    pub mu_t_margin: f64,
    pub bulk_margin: f64,
}

pub fn check_spherical(m: &EffectiveModuli) -> SphericalCheck {
    let bulk = 3.0 * m.lambda_t + 2.0 * m.mu_t;
    SphericalCheck {
        ok: m.mu_t > 0.0 && bulk > 0.0,
        mu0: (2.0 * m.mu_t).min(2.0 * m.mu_t + 3.0 * m.lambda_t),
        mu_t_margin: m.mu_t,
        bulk_margin: bulk,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    /// Filled only when C₀ is spherical.
    pub spherical: Option<SphericalCheck>,
    pub general_ok: bool,
    pub c2: f64,
    pub c3: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    /// α₁ − ½ max_{i≠j} |h_ij|.
    pub alpha1_margin: f64,
    /// min_i (2α₁ + α₀/(2λ_i)); the coefficient of N_ii² in the mixed part of ℋ.
    pub diag_margin: f64,
    /// h_ij for i ≠ j; zero on the diagonal.
    pub h_matrix: [[f64; 3]; 3],
    /// Eigenvalues of C₀ in ascending order.
    pub eigenvalues: [f64; 3],
}

impl StabilityReport {
    pub fn spherical_ok(&self) -> bool {
        self.spherical.map(|s| s.ok).unwrap_or(false)
    }
}

/// Eigen-decomposition of C₀ = F₀ᵀF₀ plus the rotation of the polar split F₀ = RU.
struct Stretch {
    lambda: [f64; 3],
    q: Matrix3<f64>,
    r: Matrix3<f64>,
}

fn stretch(f0: &Matrix3<f64>) -> Result<Stretch> {
    let det = f0.determinant();
    if !(det > 0.0) {
        return Err(GelError::Domain { what: "det F0", value: det });
    }
    let c = f0.transpose() * f0;
    let eig = SymmetricEigen::new(0.5 * (c + c.transpose()));
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda = [eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]], eig.eigenvalues[idx[2]]];
    if !(lambda[0] > 0.0) {
        return Err(GelError::NonSpd { min_eig: lambda[0] });
    }
    let q = Matrix3::from_columns(&[
        eig.eigenvectors.column(idx[0]).into_owned(),
        eig.eigenvectors.column(idx[1]).into_owned(),
        eig.eigenvectors.column(idx[2]).into_owned(),
    ]);
    let sqrt_l = Vector3::new(lambda[0].sqrt(), lambda[1].sqrt(), lambda[2].sqrt());
    let u_inv = q * Matrix3::from_diagonal(&sqrt_l.map(|v| 1.0 / v)) * q.transpose();
    Ok(Stretch { lambda, q, r: f0 * u_inv })
}

fn is_spherical(lambda: &[f64; 3]) -> bool {
    (lambda[2] - lambda[0]).abs() <= 1e-12 * lambda[2]
}

fn elasticity_at(f0: &Matrix3<f64>, phi1: f64, params: &MaterialParams) -> Result<ElasticityTensor> {
    let c = f0.transpose() * f0;
    general_elasticity(&(0.5 * (c + c.transpose())), phi1, params)
}

pub fn check_general(f0: &Matrix3<f64>, phi1: f64, params: &MaterialParams) -> Result<StabilityReport> {
    let st = stretch(f0)?;
    let t = elasticity_at(f0, phi1, params)?;
    let i3 = t.inv[2];
    let c2 = t.w_hess[0][0] + i3 * t.w_hess[0][2];
    let c3 = i3 * i3 * t.w_hess[2][2] + 0.5 * phi1 * t.pi12;
    let [alpha0, alpha1, _] = t.alpha;
    let l = st.lambda;
    let mut h = [[0.0; 3]; 3];
    let mut hmax: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                h[i][j] = (alpha0 + alpha1 * (l[i] + l[j])) / (l[i] * l[j]).sqrt();
                hmax = hmax.max(h[i][j].abs());
            }
        }
    }
    let alpha1_margin = alpha1 - 0.5 * hmax;
    let diag_margin = l.iter().map(|li| 2.0 * alpha1 + alpha0 / (2.0 * li)).fold(f64::INFINITY, f64::min);
    let spherical = if is_spherical(&l) {
        let f = l[1].sqrt();
        let phi0 = params.phi_i / f.powi(3);
        effective_moduli(f, phi0, params).ok().map(|m| check_spherical(&m))
    } else {
        None
    };
    Ok(StabilityReport {
        spherical,
        general_ok: alpha0 < 0.0 && c2 > 0.0 && c3 > 0.0 && alpha1_margin > 0.0,
        c2,
        c3,
        alpha0,
        alpha1,
        alpha1_margin,
        diag_margin,
        h_matrix: h,
        eigenvalues: l,
    })
}

/// Report at the spherical equilibrium F₀ = f₀I.
pub fn check_equilibrium(f0: f64, params: &MaterialParams) -> Result<StabilityReport> {
    let phi0 = params.phi_i / f0.powi(3);
    check_general(&(Matrix3::identity() * f0), phi0, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticForm {
    pub h_value: f64,
    pub lower_bound: f64,
}

fn inner(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// 𝔇(∇u; F₀) by direct tensor evaluation.
pub fn frak_d_direct(f0: &Matrix3<f64>, grad_u: &Matrix3<f64>, alpha0: f64, alpha1: f64) -> Result<f64> {
    let f_inv = f0.try_inverse().ok_or(GelError::Domain { what: "det F0", value: 0.0 })?;
    let c_inv = (f0.transpose() * f0).try_inverse().ok_or(GelError::NonSpd { min_eig: 0.0 })?;
    let g = grad_u;
    let m = f_inv.transpose() * g.transpose();
    let t1 = (m * m).trace();
    let t2 = (g * c_inv * g.transpose()).trace();
    let t3 = inner(&(f0 * g.transpose()), &(g * f_inv));
    let t4 = g.norm_squared();
    Ok(0.5 * alpha0 * (t1 + t2) + alpha1 * (t3 + t4))
}

/// 𝔇 assembled from N = Qᵀ(∇uᵀR)Q in the eigenbasis of C₀ and the Γ_ij products.
pub fn frak_d_eigen(f0: &Matrix3<f64>, grad_u: &Matrix3<f64>, alpha0: f64, alpha1: f64) -> Result<f64> {
    let st = stretch(f0)?;
    let n = st.q.transpose() * grad_u.transpose() * st.r * st.q;
    let l = st.lambda;
    let mut sum = 0.0;
    for i in 0..3 {
        sum += (alpha0 / l[i] + 2.0 * alpha1) * n[(i, i)].powi(2);
        for j in 0..3 {
            if i != j {
                let hij = (alpha0 + alpha1 * (l[i] + l[j])) / (l[i] * l[j]).sqrt();
                let gamma = hij * n[(i, j)] * n[(j, i)];
                sum += 0.5 * gamma + (0.5 * alpha0 / l[i] + alpha1) * n[(i, j)].powi(2);
            }
        }
    }
    Ok(sum)
}

/// ℋ(∇u) at the state (F₀, φ₁) and the coercivity lower bound
/// (|α₀|/2)|∇uF₀⁻¹|² + C₂tr²(∇uᵀF₀) + C₃tr²(F₀⁻¹∇u).
pub fn quadratic_form_h(
    f0: &Matrix3<f64>,
    phi1: f64,
    grad_u: &Matrix3<f64>,
    params: &MaterialParams,
) -> Result<QuadraticForm> {
    let t = elasticity_at(f0, phi1, params)?;
    let f_inv = f0.try_inverse().ok_or(GelError::Domain { what: "det F0", value: 0.0 })?;
    let i3 = t.inv[2];
    let c2 = t.w_hess[0][0] + i3 * t.w_hess[0][2];
    let w33 = i3 * i3 * t.w_hess[2][2];
    let c3 = w33 + 0.5 * phi1 * t.pi12;
    let [alpha0, alpha1, _] = t.alpha;
    let tr_a = (grad_u.transpose() * f0).trace();
    let tr_b = (f_inv * grad_u).trace();
    let gf = (grad_u * f_inv).norm_squared();
    let frak_c = c2 * tr_a * tr_a + w33 * tr_b * tr_b - alpha0 * gf;
    let h_value = frak_c + frak_d_direct(f0, grad_u, alpha0, alpha1)? + 0.5 * t.pi12 * tr_b * tr_b;
    let lower_bound = 0.5 * alpha0.abs() * gf + c2 * tr_a * tr_a + c3 * tr_b * tr_b;
    Ok(QuadraticForm { h_value, lower_bound })
}
