mod common;

use common::*;
use rodsim_core::assembly::{
    assemble_dynamic_step, assemble_static, CorrectionEval, Discretization, InternalForceEval, StepCache, StepInput,
    StepScheme,
};
use rodsim_core::extraction::BoundaryKind;
use rodsim_core::forces::{FlowLoad, FreestreamProfile, LoadCase, TimeFunction};
use rodsim_core::kinematics::MaterialParams;
use rodsim_core::{DVec, Vec3};

fn material() -> MaterialParams {
    MaterialParams::new(100.0, 20.0, 2.0, 0.3, 1.0).unwrap()
}

fn flow(profile: FreestreamProfile) -> LoadCase {
    LoadCase::Flow(FlowLoad {
        c_m: 1.0,
        c_n: 1.2,
        c_t: 0.3,
        rho_f: 20.0,
        diameter: 0.1,
        profile,
    })
}

fn loads() -> Vec<LoadCase> {
    vec![
        LoadCase::Gravity { g: Vec3::new(0.0, 0.0, -9.81) },
        LoadCase::Follower2D { f0: 1.5, time: TimeFunction::Constant },
        LoadCase::TipMoment { moment: Vec3::new(0.5, -1.0, 0.3), time: TimeFunction::Constant },
        LoadCase::PointLoad { s: 1.3, force: Vec3::new(1.0, 2.0, 3.0), time: TimeFunction::Vanishing { t_c: 1.0 } },
    ]
}

fn discretizations() -> Vec<Discretization> {
    let dir = Vec3::new(1.0, 0.0, 1.0).normalize();
    vec![
        straight_rod(2, 1, 6, 2.0, dir, BoundaryKind::Clamped, BoundaryKind::Free, false),
        straight_rod(3, 1, 5, 2.0, dir, BoundaryKind::Clamped, BoundaryKind::Free, true),
        straight_rod(3, 2, 5, 2.0, dir, BoundaryKind::Free, BoundaryKind::Free, false),
        straight_rod(2, 1, 4, 2.0, dir, BoundaryKind::Pinned, BoundaryKind::Pinned, true),
    ]
}

fn step_h(disc: &Discretization, q_red: &DVec) -> f64 {
    1e-6 * disc.expand(q_red).amax().max(1.0)
}

#[test]
fn static_tangent_matches_finite_differences() {
    let mat = material();
    let mut rng = rng(11);
    for disc in discretizations() {
        let h_el = disc.space().element_length();
        for _ in 0..20 {
            let q = random_vec(&mut rng, disc.reduced_dim(), 0.15 * h_el);
            let sys = assemble_static(&disc, &q, &loads(), 0.7, &mat).unwrap();
            let fd = fd_jacobian(&q, step_h(&disc, &q), |x| {
                assemble_static(&disc, x, &loads(), 0.7, &mat).unwrap().residual
            });
            let dev = relative_deviation(&sys.tangent, &fd);
            assert!(dev < 1e-5, "p={} deviation {dev:e}", disc.space().degree());
        }
    }
}

#[test]
fn static_tangent_is_symmetric_without_loads() {
    let mat = material();
    let mut rng = rng(12);
    for disc in discretizations() {
        let q = random_vec(&mut rng, disc.reduced_dim(), 0.1);
        let k = assemble_static(&disc, &q, &[], 1.0, &mat).unwrap().tangent.to_dense();
        assert!((&k - k.transpose()).amax() < 1e-12 * k.amax());
    }
}

#[test]
fn undeformed_rod_has_zero_residual() {
    let mat = material();
    for disc in discretizations() {
        let q = DVec::zeros(disc.reduced_dim());
        let r = assemble_static(&disc, &q, &[], 1.0, &mat).unwrap().residual;
        assert!(r.amax() < 1e-12 * mat.ea, "{}", r.amax());
    }
}

fn check_dynamic(scheme: StepScheme, profile: FreestreamProfile, seed: u64) {
    let mat = material();
    let mut rng = rng(seed);
    let mut all = loads();
    all.push(flow(profile.clone()));
    for disc in discretizations() {
        let h_el = disc.space().element_length();
        for trial in 0..20 {
            let dt = [0.01, 0.05][trial % 2];
            let qn_red = random_vec(&mut rng, disc.reduced_dim(), 0.15 * h_el);
            let qdn_red = random_vec(&mut rng, disc.reduced_dim(), 1.0);
            let q1 = &qn_red + random_vec(&mut rng, disc.reduced_dim(), 0.03 * h_el);
            let q_n = disc.expand(&qn_red);
            let qdot_n = disc.expand_velocity(&qdn_red);
            let input = StepInput { q_n: &q_n, qdot_n: &qdot_n, t_n: 0.3, dt };
            let cache = StepCache::new(&disc, &input, &mat).unwrap();
            let sys = assemble_dynamic_step(&disc, &input, &cache, &q1, &all, &mat, scheme).unwrap();
            let fd = fd_jacobian(&q1, step_h(&disc, &q1), |x| {
                assemble_dynamic_step(&disc, &input, &cache, x, &all, &mat, scheme).unwrap().residual
            });
            let dev = relative_deviation(&sys.tangent, &fd);
            assert!(dev < 1e-5, "{scheme:?} {profile:?} p={} dt={dt}: deviation {dev:e}", disc.space().degree());
        }
    }
}

#[test]
fn dynamic_tangent_midpoint_rotating_wind() {
    check_dynamic(StepScheme::default(), FreestreamProfile::RotatingWind { v0: 3.0, beta0: 0.7, length: 2.0 }, 21);
}

#[test]
fn dynamic_tangent_endpoint_average_parabolic_wind() {
    check_dynamic(
        StepScheme { correction: CorrectionEval::EndpointAverage, internal: InternalForceEval::Trapezoidal },
        FreestreamProfile::ParabolicWind { c: 2.0, modulation: 0.4, omega: 3.0 },
        22,
    );
}

#[test]
fn dynamic_tangent_still_fluid() {
    check_dynamic(StepScheme::default(), FreestreamProfile::Still, 23);
}

#[test]
fn dynamic_tangent_table_profile() {
    let table = FreestreamProfile::table(vec![-1.0, 0.5, 1.0, 3.0], vec![0.5, 2.0, 1.0, 4.0], Vec3::new(1.0, 1.0, 0.0)).unwrap();
    check_dynamic(StepScheme::default(), table, 24);
}

#[test]
fn dynamic_tangent_midpoint_internal_forces() {
    let scheme = StepScheme { correction: CorrectionEval::Midpoint, internal: InternalForceEval::Midpoint };
    check_dynamic(scheme, FreestreamProfile::Uniform { velocity: Vec3::new(1.0, -0.5, 0.2) }, 25);
}

#[test]
fn inertia_block_scales_with_step_size() {
    // translational inertia contributes 2A_ρ/Δt² times the mass pattern
    let mat = MaterialParams::new(100.0, 20.0, 2.0, 0.0, 1.0).unwrap();
    let disc = &discretizations()[0];
    let q = DVec::zeros(disc.reduced_dim());
    let q_n = disc.expand(&q);
    let qdot_n = DVec::zeros(disc.full_dim());
    let inertia = |dt: f64| {
        let input = StepInput { q_n: &q_n, qdot_n: &qdot_n, t_n: 0.0, dt };
        let cache = StepCache::new(disc, &input, &mat).unwrap();
        let k = assemble_dynamic_step(disc, &input, &cache, &q, &[], &mat, StepScheme::default()).unwrap().tangent;
        let stat = assemble_static(disc, &q, &[], 1.0, &mat).unwrap().tangent;
        k.to_dense() - stat.to_dense() * 0.5
    };
    let a = inertia(0.01);
    let b = inertia(0.02);
    assert!((&a - &b * 4.0).amax() < 1e-9 * a.amax());
}

#[test]
fn zero_state_step_is_fixed_point() {
    let mat = material();
    for disc in discretizations() {
        let q = DVec::zeros(disc.reduced_dim());
        let q_n = disc.expand(&q);
        let qdot_n = DVec::zeros(disc.full_dim());
        let input = StepInput { q_n: &q_n, qdot_n: &qdot_n, t_n: 0.0, dt: 0.01 };
        let cache = StepCache::new(&disc, &input, &mat).unwrap();
        let sys = assemble_dynamic_step(&disc, &input, &cache, &q, &[], &mat, StepScheme::default()).unwrap();
        assert!(sys.residual.amax() < 1e-12 * mat.ea);
    }
}
