mod common;

use std::collections::HashMap;

use common::zero_state;
use gelsim::config::preset;
use gelsim::dynamics::{build_extensions, energy, energy_residual, initial_state, ForcingTerms, Loads, ScenarioConfig, SimState, Stepper, Variant};
use gelsim::equilibrium::solve_spherical;
use gelsim::fem::assembly::{assemble_form, Form};
use gelsim::fem::space::{FemSpace, SpaceKind};
use gelsim::material::{effective_moduli, general_elasticity, reversible_stress, MaterialParams};
use gelsim::mesh::Mesh;
use gelsim::stability::{frak_d_direct, frak_d_eigen};
use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig1() -> ScenarioConfig {
    preset("fig1").unwrap().resolve().unwrap().scenario
}

fn random_sym(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    (m + m.transpose()) * 0.5
}

#[test]
fn elasticity_tensor_is_major_symmetric() {
    let p = fig1().params;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let m = Matrix3::from_fn(|_, _| rng.gen_range(-0.3..0.3));
        let c0 = m.transpose() * m + Matrix3::identity() * 0.7;
        let t = general_elasticity(&c0, 0.55, &p).unwrap();
        let (a, b) = (random_sym(&mut rng), random_sym(&mut rng));
        let ab = t.apply(&a).dot(&b);
        let ba = t.apply(&b).dot(&a);
        assert!((ab - ba).abs() <= 1e-10 * ab.abs().max(1.0), "{ab} vs {ba}");
    }
}

#[test]
fn moduli_linearize_stress_at_equilibrium() {
    for name in ["fig1", "fig2"] {
        let p = preset(name).unwrap().resolve().unwrap().scenario.params;
        let eq = solve_spherical(&p).unwrap();
        let m = effective_moduli(eq.f0, eq.phi0, &p).unwrap();
        let f = Matrix3::identity() * eq.f0;
        assert!(reversible_stress(&f, &p).unwrap().norm() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let g = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let e = 1e-5;
            let d = (reversible_stress(&(f + g * e), &p).unwrap() - reversible_stress(&(f - g * e), &p).unwrap()) / (2.0 * e);
            let lin = (g + g.transpose()) * m.mu_t + Matrix3::identity() * (m.lambda_t * g.trace());
            assert!((d - lin).norm() < 1e-6 * lin.norm(), "{name}: {}", (d - lin).norm() / lin.norm());
        }
    }
}

#[test]
fn frak_d_two_evaluations_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let m = Matrix3::from_fn(|_, _| rng.gen_range(-0.2..0.2));
        let f0 = Matrix3::identity() + m;
        let g = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let (a0, a1) = (rng.gen_range(-2.0..-0.1), rng.gen_range(0.1..3.0));
        let d = frak_d_direct(&f0, &g, a0, a1).unwrap();
        let e = frak_d_eigen(&f0, &g, a0, a1).unwrap();
        assert!((d - e).abs() <= 1e-9 * d.abs().max(1.0), "{d} vs {e}");
    }
}

#[test]
fn elasticity_kernel_is_rigid_motions() {
    let mesh = Mesh::unit_square(1).unwrap();
    let vs = FemSpace::new(SpaceKind::VectorP2, &mesh);
    let k = assemble_form(Form::VectorElasticity { lambda: 0.8, mu: 1.3 }, &vs, &vs, &mesh).unwrap();
    let n = vs.dof_count;
    let dense = DMatrix::from_fn(n, n, |i, j| k.get(i, j));
    let eig = dense.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let zero = eig.eigenvalues.iter().filter(|l| l.abs() < 1e-10 * scale).count();
    assert_eq!(zero, 3);
    for r in [|_: [f64; 2]| [1.0, 0.0], |_: [f64; 2]| [0.0, 1.0], |x: [f64; 2]| [-x[1], x[0]]] {
        let v = vs.interpolate_vector(r);
        let kv = k.matvec(&v);
        assert!(kv.iter().all(|x| x.abs() < 1e-12 * scale));
    }
}

fn node_key(x: [f64; 2]) -> (i64, i64) {
    ((x[0] * 1e9).round() as i64, (x[1] * 1e9).round() as i64)
}

fn run(sc: &ScenarioConfig, mesh: &Mesh, steps: usize) -> (Stepper, SimState) {
    let eq = solve_spherical(&sc.params).unwrap();
    let st = Stepper::new(sc, mesh, &eq).unwrap();
    let ext = build_extensions(sc, mesh).unwrap();
    let m = effective_moduli(eq.f0, eq.phi0, &sc.params).unwrap();
    let forcing = ForcingTerms { variant: sc.variant, p0: sc.p0, phi0: eq.phi0, kappa_perm: m.kappa_perm, ext };
    let loads = forcing.loads(mesh, &st.vspace, &st.pspace).unwrap();
    let mut s = initial_state(&st, eq.f0).unwrap();
    for _ in 0..steps {
        s = st.step(&s, &loads).unwrap();
    }
    (st, s)
}

#[test]
fn mirrored_mesh_gives_mirrored_solution() {
    let mesh = Mesh::unit_square(3).unwrap();
    let mirror = mesh.mirrored_x();
    for v in Variant::ALL {
        let sc = ScenarioConfig { variant: v, level: 3, n_steps: 5, ..fig1() };
        let (st, s) = run(&sc, &mesh, 5);
        let (sm, m) = run(&sc, &mirror, 5);
        let lookup: HashMap<_, _> = st.vspace.nodes.iter().enumerate().map(|(i, x)| (node_key(*x), i)).collect();
        let nn = st.vspace.n_nodes;
        let scale = s.max_abs();
        for (a, x) in sm.vspace.nodes.iter().enumerate() {
            let b = lookup[&node_key([1.0 - x[0], x[1]])];
            assert!((m.u[a] + s.u[b]).abs() < 1e-9 * scale, "{}: ux at {x:?}", v.name());
            assert!((m.u[nn + a] - s.u[nn + b]).abs() < 1e-9 * scale, "{}: uy at {x:?}", v.name());
            if a < st.pspace.n_nodes {
                assert!((m.p[a] - s.p[b]).abs() < 1e-9 * scale, "{}: p at {x:?}", v.name());
            }
        }
    }
}

#[test]
fn energy_law_with_boundary_pressure() {
    let mesh = Mesh::unit_square(3).unwrap();
    for v in Variant::ALL {
        let sc = ScenarioConfig { variant: v, level: 3, ..fig1() };
        assert!(sc.p0 > 0.0);
        let eq = solve_spherical(&sc.params).unwrap();
        let st = Stepper::new(&sc, &mesh, &eq).unwrap();
        let ext = build_extensions(&sc, &mesh).unwrap();
        let m = effective_moduli(eq.f0, eq.phi0, &sc.params).unwrap();
        let forcing = ForcingTerms { variant: v, p0: sc.p0, phi0: eq.phi0, kappa_perm: m.kappa_perm, ext };
        let loads = forcing.loads(&mesh, &st.vspace, &st.pspace).unwrap();
        let mut prev = initial_state(&st, eq.f0).unwrap();
        let e0 = energy(&st, &prev);
        let mut total = 0.0;
        for k in 1..=50 {
            let next = st.step(&prev, &loads).unwrap();
            let r = energy_residual(&st, k, &prev, &next, &loads);
            assert!(r.residual <= 1e-8 * e0, "{} step {k}: {}", v.name(), r.residual);
            assert!(r.dissipation >= 0.0);
            total += r.residual;
            prev = next;
        }
        assert!(total <= 1e-8 * e0, "{}: accumulated {total}", v.name());
    }
}

#[test]
fn unforced_run_has_no_net_reaction() {
    let mesh = Mesh::unit_square(3).unwrap();
    for v in Variant::ALL {
        let sc = ScenarioConfig { variant: v, level: 3, ..fig1() };
        let eq = solve_spherical(&sc.params).unwrap();
        let st = Stepper::new(&sc, &mesh, &eq).unwrap();
        let loads = Loads::zero(st.n_u(), st.n_p());
        let mut prev = initial_state(&st, eq.f0).unwrap();
        for _ in 0..10 {
            let next = st.step(&prev, &loads).unwrap();
            let r = st.reaction(&prev, &next, &loads);
            let scale = st.row_residual(&prev, &next, &loads).iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
            assert!(r[0].abs() < 1e-8 * scale.max(prev.max_abs()), "{}: {r:?}", v.name());
            assert!(r[1].abs() < 1e-8 * scale.max(prev.max_abs()), "{}: {r:?}", v.name());
            prev = next;
        }
    }
}

#[test]
fn stepping_is_bitwise_repeatable() {
    let mesh = Mesh::unit_square(3).unwrap();
    let sc = ScenarioConfig { variant: Variant::ViscousPermeable, level: 3, ..fig1() };
    let (_, a) = run(&sc, &mesh, 8);
    let (_, b) = run(&sc, &mesh, 8);
    assert_eq!(a.u, b.u);
    assert_eq!(a.p, b.p);
    assert_eq!(a.q, b.q);
}

#[test]
fn zero_state_is_fixed_point_of_every_variant() {
    let mesh = Mesh::unit_square(2).unwrap();
    for v in Variant::ALL {
        let sc = ScenarioConfig { variant: v, level: 2, ..fig1() };
        let eq = solve_spherical(&sc.params).unwrap();
        let st = Stepper::new(&sc, &mesh, &eq).unwrap();
        let loads = Loads::zero(st.n_u(), st.n_p());
        let mut s = zero_state(&st);
        for _ in 0..10 {
            s = st.step(&s, &loads).unwrap();
        }
        assert_eq!(s.max_abs(), 0.0);
    }
}

#[test]
fn initial_displacement_matches_closed_form() {
    let mesh = Mesh::unit_square(2).unwrap();
    let p = MaterialParams::default();
    let eq = solve_spherical(&p).unwrap();
    let st = Stepper::new(&ScenarioConfig { level: 2, ..ScenarioConfig::new(Variant::InviscidImpermeable, p) }, &mesh, &eq).unwrap();
    let f = 0.9;
    let g = f * (1.0 - f * f * f);
    let s = initial_state(&st, f).unwrap();
    let nn = st.vspace.n_nodes;
    let tau = std::f64::consts::TAU;
    for (a, x) in st.vspace.nodes.iter().enumerate() {
        let ux = g * (tau * x[0]).sin() / tau;
        let uy = g * x[1] * (1.0 - (tau * x[0]).cos());
        assert!((s.u[a] - ux).abs() < 1e-14 && (s.u[nn + a] - uy).abs() < 1e-14);
        if x[0] == 0.0 || x[0] == 1.0 {
            assert!(s.u[nn + a].abs() < 1e-14);
        }
    }
    // x = 1/4, y = 1/2: (g/2π, g/2)
    let a = st.vspace.nodes.iter().position(|x| node_key(*x) == node_key([0.25, 0.5])).unwrap();
    assert!((s.u[a] - g / tau).abs() < 1e-14 && (s.u[nn + a] - 0.5 * g).abs() < 1e-14);
    // f = 1 is the swelling-free reference and gives no displacement
    assert_eq!(initial_state(&st, 1.0).unwrap().max_abs(), 0.0);
}
