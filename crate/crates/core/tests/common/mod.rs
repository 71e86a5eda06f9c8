#![allow(dead_code)]

use std::f64::consts::PI;

use gelsim::dynamics::{Forcing, Loads, SimState, Stepper, Variant};
use gelsim::fem::assembly::{l2_error_scalar, l2_error_vector};
use gelsim::material::{EffectiveModuli, MaterialParams};
use gelsim::mesh::Mesh;
use gelsim::Result;

/// Spatial profile of a manufactured displacement with the derivatives the
/// momentum source needs.
#[derive(Clone, Copy, Debug)]
pub struct Profile {
    pub u: [f64; 2],
    /// grad[c][d] = ∂U_c/∂x_d.
    pub grad: [[f64; 2]; 2],
    pub lap: [f64; 2],
    pub grad_div: [f64; 2],
}

#[derive(Clone, Copy, Debug)]
pub struct PressureProfile {
    pub p: f64,
    pub grad: [f64; 2],
    pub lap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Study {
    /// u = t U, p = Pp: backward Euler is exact, only the space error remains.
    Spatial,
    /// Polynomial U, Pp reproduced exactly in space; sin(πt) in time.
    Temporal,
}

/// Manufactured solution of the inviscid impermeable system
/// −∇·(2μ̃D(u) + η₁D(u_t) + (λ̃q + μ₁q_t)I − pI) = b, q = ∇·u,
/// q_t − κΔp = s, with traction on Γ and flux on ∂Ω.
pub struct Mms {
    pub study: Study,
    pub moduli: EffectiveModuli,
    pub params: MaterialParams,
}

impl Mms {
    pub fn new(study: Study) -> Self {
        Mms {
            study,
            moduli: EffectiveModuli { lambda_t: 0.8, mu_t: 1.3, lambda_iso: 0.0, mu_iso: 0.0, kappa_perm: 0.2 },
            params: MaterialParams::default(),
        }
    }

    pub fn time(&self, t: f64) -> (f64, f64, f64) {
        match self.study {
            Study::Spatial => (t, 1.0, 1.0),
            Study::Temporal => ((PI * t).sin(), PI * (PI * t).cos(), (PI * t).sin()),
        }
    }

    pub fn profile(&self, x: [f64; 2]) -> Profile {
        match self.study {
            Study::Spatial => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                Profile {
                    u: [sx * sy, sx * cy],
                    grad: [[PI * cx * sy, PI * sx * cy], [PI * cx * cy, -PI * sx * sy]],
                    lap: [-2.0 * PI * PI * sx * sy, -2.0 * PI * PI * sx * cy],
                    grad_div: [-PI * PI * sy * (sx + cx), PI * PI * cy * (cx - sx)],
                }
            }
            Study::Temporal => {
                let w = x[0] * (1.0 - x[0]);
                let dw = 1.0 - 2.0 * x[0];
                Profile { u: [w, w], grad: [[dw, 0.0], [dw, 0.0]], lap: [-2.0, -2.0], grad_div: [-2.0, 0.0] }
            }
        }
    }

    pub fn pressure(&self, x: [f64; 2]) -> PressureProfile {
        match self.study {
            Study::Spatial => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                PressureProfile { p: cx * cy, grad: [-PI * sx * cy, -PI * cx * sy], lap: -2.0 * PI * PI * cx * cy }
            }
            Study::Temporal => PressureProfile { p: x[0] + x[1], grad: [1.0, 1.0], lap: 0.0 },
        }
    }

    pub fn exact_u(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (tt, _, _) = self.time(t);
        let u = self.profile(x).u;
        [tt * u[0], tt * u[1]]
    }

    pub fn exact_p(&self, x: [f64; 2], t: f64) -> f64 {
        self.time(t).2 * self.pressure(x).p
    }

    fn coefficients(&self, t: f64) -> (f64, f64, f64) {
        let (tt, dt, _) = self.time(t);
        let m = &self.moduli;
        (m.mu_t * tt + 0.5 * self.params.eta1 * dt, m.lambda_t * tt + self.params.mu1 * dt, 2.0 * m.mu_t * tt + self.params.eta1 * dt)
    }
}

impl Forcing for Mms {
    fn body_u(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let pr = self.profile(x);
        let pp = self.pressure(x);
        let s = self.time(t).2;
        let (a, l, _) = self.coefficients(t);
        let mut b = [0.0; 2];
        for c in 0..2 {
            b[c] = -(a * (pr.lap[c] + pr.grad_div[c]) + l * pr.grad_div[c] - s * pp.grad[c]);
        }
        b
    }

    fn traction(&self, x: [f64; 2], n: [f64; 2], t: f64) -> [f64; 2] {
        let pr = self.profile(x);
        let s = self.time(t).2;
        let (_, l, d) = self.coefficients(t);
        let g = pr.grad;
        let div = g[0][0] + g[1][1];
        let sym = [[g[0][0], 0.5 * (g[0][1] + g[1][0])], [0.5 * (g[0][1] + g[1][0]), g[1][1]]];
        let iso = l * div - s * self.pressure(x).p;
        [
            d * (sym[0][0] * n[0] + sym[0][1] * n[1]) + iso * n[0],
            d * (sym[1][0] * n[0] + sym[1][1] * n[1]) + iso * n[1],
        ]
    }

    fn source(&self, x: [f64; 2], t: f64) -> f64 {
        let (_, dtt, s) = self.time(t);
        let g = self.profile(x).grad;
        dtt * (g[0][0] + g[1][1]) - self.moduli.kappa_perm * s * self.pressure(x).lap
    }

    fn flux(&self, x: [f64; 2], n: [f64; 2], t: f64) -> f64 {
        let g = self.pressure(x).grad;
        self.moduli.kappa_perm * self.time(t).2 * (g[0] * n[0] + g[1] * n[1])
    }
}

/// L² errors of u and p at `t_end` on a level-`level` mesh.
pub fn mms_errors(mms: &Mms, level: u32, dt: f64, t_end: f64) -> Result<(f64, f64)> {
    let mesh = Mesh::unit_square(level)?;
    let phi0 = 0.6;
    let st = Stepper::with_moduli(Variant::InviscidImpermeable, dt, &mms.params, phi0, mms.moduli, &mesh)?;
    let mut s = SimState { t: 0.0, u: vec![0.0; st.n_u()], q: vec![0.0; st.n_p()], p: vec![0.0; st.n_p()], v2: None };
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        let loads = Loads::from_forcing(&mesh, &st.vspace, &st.pspace, mms, s.t + dt);
        s = st.step(&s, &loads)?;
    }
    let eu = l2_error_vector(&st.vspace, &mesh, &s.u, &|x| mms.exact_u(x, s.t));
    let ep = l2_error_scalar(&st.pspace, &mesh, &s.p, &|x| mms.exact_p(x, s.t));
    Ok((eu, ep))
}

pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn zero_state(st: &Stepper) -> SimState {
    SimState {
        t: 0.0,
        u: vec![0.0; st.n_u()],
        q: vec![0.0; st.n_p()],
        p: vec![0.0; st.n_p()],
        v2: st.variant.is_viscous().then(|| vec![0.0; st.n_u()]),
    }
}
