mod common;

use common::*;
use rodsim_core::assembly::{static_residual_full, CorrectionEval, InternalForceEval};
use rodsim_core::diagnostics::precision_quotient;
use rodsim_core::dynamics::{run, run_with, step, step_with_dt, DynamicProblem, RodState, Termination};
use rodsim_core::extraction::BoundaryKind;
use rodsim_core::forces::{LoadCase, TimeFunction};
use rodsim_core::kinematics::MaterialParams;
use rodsim_core::{DVec, Vec3};

fn material() -> MaterialParams {
    MaterialParams::new(500.0, 5.0, 1.0, 0.05, 1.0).unwrap()
}

fn free_problem(p: usize, r: usize, outliers: bool, dt: f64, t_end: f64) -> DynamicProblem {
    let disc = straight_rod(p, r, 6, 2.0, Vec3::new(0.0, 0.6, 0.8), BoundaryKind::Free, BoundaryKind::Free, outliers);
    DynamicProblem::new(disc, material(), vec![], dt, t_end)
}

/// Deformed, spinning and translating initial state.
fn moving_state(problem: &DynamicProblem, seed: u64) -> RodState {
    let mut rng = rng(seed);
    let n = problem.disc.reduced_dim();
    let mut q = random_vec(&mut rng, n, 0.02);
    let mut v = random_vec(&mut rng, n, 0.3);
    for a in 0..n / 3 {
        q[3 * a] += 0.05 * (a as f64 * 0.7).sin();
        v[3 * a + 2] += 0.4;
    }
    RodState { q_red: q, qdot_red: v }
}

#[test]
fn rest_state_is_fixed_point() {
    let problem = free_problem(3, 2, true, 0.01, 0.05);
    let rest = RodState::at_rest(&problem.disc);
    let (next, iters) = step(&problem, 0.0, &rest).unwrap();
    assert_eq!(iters, 1);
    assert!(next.q_red.amax() < 1e-14 && next.qdot_red.amax() < 1e-12);
    let traj = run(&problem, &rest).unwrap();
    assert!(traj.completed());
    assert_eq!(traj.states.len(), 6);
    for s in &traj.states {
        assert!(s.q_red.amax() < 1e-14);
    }
}

#[test]
fn linear_momentum_conserved_in_free_flight() {
    for (p, r) in [(2, 1), (3, 2), (3, 1)] {
        let problem = free_problem(p, r, false, 0.005, 0.5);
        let traj = run(&problem, &moving_state(&problem, 5)).unwrap();
        assert!(traj.completed());
        let scale = traj.records[0].linear_momentum.amax();
        for w in traj.records.windows(2) {
            let dl = (w[1].linear_momentum - w[0].linear_momentum).amax();
            assert!(dl < 1e-10 * scale + 1e-12, "p={p} r={r} linear drift {dl:e}");
        }
    }
}

#[test]
fn angular_momentum_defect_matches_trapezoidal_torque() {
    // without rotary inertia one step changes j by (Δt/4) Σₐ Δqₐ × Δfₐ,
    // fₐ being the internal force on control point a
    let mut problem = free_problem(3, 2, false, 0.004, 0.1);
    problem.material = problem.material.with_alpha(0.0).unwrap();
    let mat = problem.material;
    let disc = &problem.disc;
    let mut state = moving_state(&problem, 5);
    let force = |q: &DVec| static_residual_full(disc, q, &[], 0.0, &mat).unwrap().0;
    for k in 0..10 {
        let (next, _) = step(&problem, k as f64 * problem.dt, &state).unwrap();
        let j0 = problem.record(0.0, &state).unwrap().angular_momentum;
        let j1 = problem.record(0.0, &next).unwrap().angular_momentum;
        let (q0, q1) = (disc.expand(&state.q_red), disc.expand(&next.q_red));
        let (f0, f1) = (force(&q0), force(&q1));
        let mut defect = Vec3::zeros();
        for a in 0..q0.len() / 3 {
            let dq = Vec3::new(q1[3 * a] - q0[3 * a], q1[3 * a + 1] - q0[3 * a + 1], q1[3 * a + 2] - q0[3 * a + 2]);
            let df = Vec3::new(f1[3 * a] - f0[3 * a], f1[3 * a + 1] - f0[3 * a + 1], f1[3 * a + 2] - f0[3 * a + 2]);
            defect += dq.cross(&df) * (problem.dt / 4.0);
        }
        let dj = j1 - j0;
        assert!((dj - defect).amax() < 1e-9 * j0.amax() + 1e-11, "step {k}: {dj:?} vs {defect:?}");
        assert!(defect.amax() > 0.0);
        state = next;
    }
}

#[test]
fn midpoint_internal_forces_conserve_angular_momentum() {
    // exact without rotary inertia; the director momentum is nonlinear in
    // the midpoint state and leaves a defect proportional to α I_ρ
    let mut problem = free_problem(3, 2, false, 0.005, 0.5);
    problem.material = problem.material.with_alpha(0.0).unwrap();
    problem.scheme.internal = InternalForceEval::Midpoint;
    let traj = run(&problem, &moving_state(&problem, 5)).unwrap();
    let scale = traj.records[0].angular_momentum.amax();
    for w in traj.records.windows(2) {
        let dj = (w[1].angular_momentum - w[0].angular_momentum).amax();
        assert!(dj < 1e-10 * scale + 1e-12, "angular drift {dj:e}");
    }
}

#[test]
fn energy_nearly_conserved_in_free_flight() {
    let problem = free_problem(3, 2, true, 0.002, 1.0);
    let traj = run(&problem, &moving_state(&problem, 6)).unwrap();
    let e0 = traj.records[0].total;
    let drift = traj.records.iter().map(|r| (r.total - e0).abs()).fold(0.0, f64::max) / e0;
    assert!(drift < 1e-3, "relative energy drift {drift:e}");
    for r in &traj.records {
        assert!((r.total - (r.kinetic + r.potential)).abs() <= 1e-12 * r.total.abs());
    }
}

#[test]
fn step_then_reverse_returns() {
    let problem = free_problem(3, 2, false, 0.005, 0.1);
    let start = moving_state(&problem, 7);
    let (mid, _) = step(&problem, 0.0, &start).unwrap();
    let (back, _) = step_with_dt(&problem, problem.dt, -problem.dt, &mid).unwrap();
    assert!((&back.q_red - &start.q_red).amax() < 1e-9);
    assert!((&back.qdot_red - &start.qdot_red).amax() < 1e-7);
}

#[test]
fn runs_are_deterministic() {
    let mut problem = free_problem(2, 1, true, 0.01, 0.2);
    problem.loads.push(LoadCase::Gravity { g: Vec3::new(0.0, 0.0, -9.81) });
    let s = moving_state(&problem, 8);
    let a = run(&problem, &s).unwrap();
    let b = run(&problem, &s).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert_eq!(x, y);
    }
    assert_eq!(a.records, b.records);
}

#[test]
fn second_order_in_time() {
    let base = free_problem(3, 2, true, 0.001, 0.1);
    let s0 = moving_state(&base, 9);
    let sample = |dt: f64| {
        let mut p = base.clone();
        p.dt = dt;
        let stride = (0.001 / dt).round() as usize;
        let traj = run(&p, &s0).unwrap();
        traj.states.iter().step_by(stride).map(|s| p.disc.expand(&s.q_red)).collect::<Vec<DVec>>()
    };
    let (a, b, c) = (sample(0.001), sample(0.0005), sample(0.00025));
    let q = precision_quotient(&a, &b, &c).unwrap();
    let valid: Vec<f64> = q.iter().skip(1).flatten().copied().collect();
    let inside = valid.iter().filter(|v| (3.5..=4.5).contains(*v)).count();
    assert!(inside as f64 >= 0.95 * valid.len() as f64, "{valid:?}");
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    assert!((mean - 4.0).abs() < 0.3, "{mean}");
}

#[test]
fn correction_variants_differ_at_second_order() {
    let gap = |dt: f64| {
        let mut a = free_problem(3, 2, true, dt, 0.1);
        let s0 = moving_state(&a, 10);
        let ta = run(&a, &s0).unwrap();
        a.scheme.correction = CorrectionEval::EndpointAverage;
        let tb = run(&a, &s0).unwrap();
        (&ta.states.last().unwrap().q_red - &tb.states.last().unwrap().q_red).amax()
    };
    let ratio = gap(0.002) / gap(0.001);
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
}

#[test]
fn clamped_rod_with_vanishing_load_completes() {
    let disc = straight_rod(3, 1, 8, 2.0, Vec3::z(), BoundaryKind::Clamped, BoundaryKind::Free, true);
    let loads = vec![LoadCase::PointLoad {
        s: 2.0,
        force: Vec3::new(0.0, 0.5, 0.0),
        time: TimeFunction::Vanishing { t_c: 0.2 },
    }];
    let problem = DynamicProblem::new(disc, material(), loads, 0.01, 1.0);
    let mut seen = 0;
    let traj = run_with(&problem, &RodState::at_rest(&problem.disc), false, |_| seen += 1).unwrap();
    assert_eq!(traj.status, Termination::Completed);
    assert_eq!(seen, 101);
    assert!(traj.states.is_empty());
    // after the load vanishes the energy stays put
    let after: Vec<f64> = traj.records.iter().filter(|r| r.t > 0.2 + 1e-9).map(|r| r.total).collect();
    let e = after[0];
    assert!(after.iter().all(|v| (v - e).abs() < 1e-3 * e));
}

#[test]
fn invalid_problems_are_rejected() {
    let mut p = free_problem(2, 1, false, 0.01, 0.1);
    p.dt = -1.0;
    assert!(run(&p, &RodState::at_rest(&p.disc)).is_err());
    let mut p = free_problem(2, 1, false, 0.01, 0.001);
    p.t_end = 0.001;
    assert!(run(&p, &RodState::at_rest(&p.disc)).is_err());
}
