//! Implicit time integration with the hybrid midpoint/trapezoidal scheme.
//!
//! Per step the nonlinear system
//! `[M(q)q̇]_{n+1} − [M(q)q̇]_n)/Δt + c_{n+1/2} + ½(F_int(q_{n+1}) + F_int(q_n)) − F_ext = 0`
//! is solved for `q_{n+1}` in reduced coordinates, with
//! `q̇_{n+1} = (2/Δt)(q_{n+1} − q_n) − q̇_n`.

use alloc::vec::Vec;

use crate::assembly::{assemble_dynamic_step, energies, momenta, Discretization, StepCache, StepInput, StepScheme};
use crate::diagnostics::DiagnosticsRecord;
use crate::forces::LoadCase;
use crate::kinematics::MaterialParams;
#[allow(unused_imports)] // shadowed when std is in the dependency graph
use num_traits::Float;

use crate::{DVec, Error, Result};

/// State in reduced coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub q_red: DVec,
    pub qdot_red: DVec,
}

impl RodState {
    /// The reference configuration at rest.
    pub fn at_rest(disc: &Discretization) -> Self {
        Self {
            q_red: DVec::zeros(disc.reduced_dim()),
            qdot_red: DVec::zeros(disc.reduced_dim()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicProblem {
    pub disc: Discretization,
    pub material: MaterialParams,
    pub loads: Vec<LoadCase>,
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub scheme: StepScheme,
    /// Divide residual and tangent by the initial residual norm of each step.
    pub normalize_residual: bool,
}

impl DynamicProblem {
    pub fn new(disc: Discretization, material: MaterialParams, loads: Vec<LoadCase>, dt: f64, t_end: f64) -> Self {
        Self {
            disc,
            material,
            loads,
            dt,
            t_end,
            newton_tol: 1e-10,
            max_newton_iters: 30,
            scheme: StepScheme::default(),
            normalize_residual: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::param("t_end", "must be at least one time step"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::param("newton_tol", "must be positive"));
        }
        self.material.validate()?;
        for l in &self.loads {
            l.validate(self.disc.space().length())?;
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }

    /// Diagnostics of a reduced state at time `t`.
    pub fn record(&self, t: f64, state: &RodState) -> Result<DiagnosticsRecord> {
        let q = self.disc.expand(&state.q_red);
        let qd = self.disc.expand_velocity(&state.qdot_red);
        let e = energies(&self.disc, &q, &qd, &self.material)?;
        let (l, j) = momenta(&self.disc, &q, &qd, &self.material)?;
        Ok(DiagnosticsRecord::new(t, e.kinetic, e.potential, l, j))
    }
}

/// Advances `state` from `t_n` by one step of size `problem.dt`.
///
/// Returns the new state and the number of Newton iterations.
pub fn step(problem: &DynamicProblem, t_n: f64, state: &RodState) -> Result<(RodState, usize)> {
    step_with_dt(problem, t_n, problem.dt, state)
}

/// As [`step`] with an explicit (possibly negative) step size.
pub fn step_with_dt(problem: &DynamicProblem, t_n: f64, dt: f64, state: &RodState) -> Result<(RodState, usize)> {
    let disc = &problem.disc;
    let q_n = disc.expand(&state.q_red);
    let qdot_n = disc.expand_velocity(&state.qdot_red);
    let input = StepInput {
        q_n: &q_n,
        qdot_n: &qdot_n,
        t_n,
        dt,
    };
    let cache = StepCache::new(disc, &input, &problem.material)?;
    let mut q = state.q_red.clone();
    let mut increments = Vec::new();
    let mut residuals = Vec::new();
    let mut scale = 1.0;
    loop {
        let sys = assemble_dynamic_step(disc, &input, &cache, &q, &problem.loads, &problem.material, problem.scheme)?;
        let mut r = sys.residual;
        let mut k = sys.tangent;
        if problem.normalize_residual {
            if increments.is_empty() {
                let n = r.amax();
                scale = if n > 0.0 { 1.0 / n } else { 1.0 };
            }
            r *= scale;
            k.scale(scale);
        }
        residuals.push(r.amax());
        let dq = match k.lu() {
            Ok(lu) => lu.solve(&(-&r)),
            Err(_) => DVec::from_element(r.len(), f64::NAN),
        };
        let norm = dq.amax();
        increments.push(norm);
        if !norm.is_finite() || (increments.len() >= problem.max_newton_iters && norm >= problem.newton_tol) {
            return Err(Error::NewtonFailure {
                time: t_n + dt,
                iterations: increments.len(),
                residual_history: residuals,
                increment_history: increments,
            });
        }
        q += &dq;
        if norm < problem.newton_tol {
            break;
        }
    }
    let qdot = (&q - &state.q_red) * (2.0 / dt) - &state.qdot_red;
    Ok((RodState { q_red: q, qdot_red: qdot }, increments.len()))
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    NewtonFailure { time: f64, error: Error },
    Degenerate { time: f64, error: Error },
}

/// Time history of a transient run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    /// States per stored step (empty when state storage is disabled).
    pub states: Vec<RodState>,
    /// Newton iterations per step; entry 0 (initial state) is 0.
    pub iterations: Vec<usize>,
    pub records: Vec<DiagnosticsRecord>,
    pub status: Termination,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.status == Termination::Completed
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Integrates from the initial state to `t_end`, storing every state.
pub fn run(problem: &DynamicProblem, initial: &RodState) -> Result<Trajectory> {
    run_with(problem, initial, true, |_| {})
}

/// One accepted step as seen by a run observer.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub index: usize,
    pub time: f64,
    pub state: &'a RodState,
    pub record: &'a DiagnosticsRecord,
    pub iterations: usize,
}

/// Integrates to `t_end`, calling `observer` after every accepted step (and
/// once for the initial state). A Newton failure or degenerate configuration
/// ends the run early with a partial trajectory.
pub fn run_with(
    problem: &DynamicProblem,
    initial: &RodState,
    store_states: bool,
    mut observer: impl FnMut(StepView),
) -> Result<Trajectory> {
    problem.validate()?;
    let n = problem.n_steps();
    let mut traj = Trajectory {
        dt: problem.dt,
        times: Vec::with_capacity(n + 1),
        states: Vec::new(),
        iterations: Vec::with_capacity(n + 1),
        records: Vec::with_capacity(n + 1),
        status: Termination::Completed,
    };
    let mut state = initial.clone();
    traj.times.push(0.0);
    traj.iterations.push(0);
    let rec = problem.record(0.0, &state)?;
    observer(StepView { index: 0, time: 0.0, state: &state, record: &rec, iterations: 0 });
    traj.records.push(rec);
    if store_states {
        traj.states.push(state.clone());
    }
    for k in 1..=n {
        let t_n = (k - 1) as f64 * problem.dt;
        let t = k as f64 * problem.dt;
        let outcome = step(problem, t_n, &state).and_then(|(s, it)| {
            let rec = problem.record(t, &s)?;
            Ok((s, it, rec))
        });
        match outcome {
            Ok((s, it, rec)) => {
                state = s;
                observer(StepView { index: k, time: t, state: &state, record: &rec, iterations: it });
                traj.times.push(t);
                traj.iterations.push(it);
                traj.records.push(rec);
                if store_states {
                    traj.states.push(state.clone());
                }
            }
            Err(e @ Error::NewtonFailure { .. }) | Err(e @ Error::Singular { .. }) => {
                traj.status = Termination::NewtonFailure { time: t, error: e };
                break;
            }
            Err(e @ Error::Degenerate { .. }) => {
                traj.status = Termination::Degenerate { time: t, error: e };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}
