//! Planar elastic pendulum integrated with the same hybrid scheme as the
//! rod, as an independent check of the time integrator.
//!
//! A point mass `m` hangs on a spring of natural length `L0` and stiffness
//! `k`. With `θ` the angle from the downward vertical and `r = L0 + η`,
//! the position is `x = r (sin θ, −cos θ)`, gravity acts along `−E₂` and
//!
//! ```text
//! T = ½ m (ṙ² + r² θ̇²),   U = ½ k (r − L0)² − m g r cos θ.
//! ```
//!
//! With `q = (θ, r)` and `M(q) = diag(m r², m)` one step solves
//!
//! ```text
//! ([M q̇]_{n+1} − [M q̇]_n)/Δt − ∂_q T(q_{n+1/2}, (q_{n+1} − q_n)/Δt)
//!     + ½(∂_q U(q_n) + ∂_q U(q_{n+1})) − Q_wind = 0,
//! q̇_{n+1} = (2/Δt)(q_{n+1} − q_n) − q̇_n,
//! ```
//!
//! where the wind force `Q_wind = Jᵀ c_w (V∞(x) − ẋ)` with `J = ∂x/∂q` is
//! evaluated at the midpoint state and time. Because neither `U` (for
//! `g = 0`) nor `T` depend on `θ`, the `θ` row states exact conservation of
//! `j₃ = m r² θ̇`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed when std is in the dependency graph
use num_traits::Float;

use nalgebra::{Matrix2, Vector2};

use crate::diagnostics::precision_quotient;
use crate::forces::FreestreamProfile;
use crate::{DVec, Error, Result, Vec3};

/// Generalized coordinates `(θ, η)` and their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    pub theta: f64,
    pub eta: f64,
    pub theta_dot: f64,
    pub eta_dot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    pub l0: f64,
    pub k: f64,
    pub mass: f64,
    pub g: f64,
    pub dt: f64,
    pub t_end: f64,
    pub initial: PendulumState,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

/// Wind acting on the mass through linear drag `c_w (V∞ − ẋ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumWind {
    pub profile: FreestreamProfile,
    /// Drag coefficient `c_w` (kg/s).
    pub drag: f64,
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l0", self.l0), ("k", self.k), ("mass", self.mass), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if !(self.g >= 0.0) {
            return Err(Error::param("g", "must be non-negative"));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::param("t_end", "must be at least one time step"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::param("newton_tol", "must be positive"));
        }
        if !(self.l0 + self.initial.eta > 0.0) {
            return Err(Error::param("eta", "spring length must stay positive"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }

    /// Position of the mass.
    pub fn position(&self, s: &PendulumState) -> Vec3 {
        let r = self.l0 + s.eta;
        Vec3::new(r * s.theta.sin(), -r * s.theta.cos(), 0.0)
    }

    /// Kinetic and potential energy.
    pub fn energies(&self, s: &PendulumState) -> (f64, f64) {
        let r = self.l0 + s.eta;
        let t = 0.5 * self.mass * (s.eta_dot * s.eta_dot + r * r * s.theta_dot * s.theta_dot);
        let u = 0.5 * self.k * s.eta * s.eta - self.mass * self.g * r * s.theta.cos();
        (t, u)
    }

    /// Angular momentum about the suspension point, `m r² θ̇`.
    pub fn angular_momentum(&self, s: &PendulumState) -> f64 {
        let r = self.l0 + s.eta;
        self.mass * r * r * s.theta_dot
    }

    /// `∂U/∂(θ, r)` and its Jacobian.
    fn potential_gradient(&self, theta: f64, r: f64) -> (Vector2<f64>, Matrix2<f64>) {
        let mg = self.mass * self.g;
        let (s, c) = theta.sin_cos();
        (
            Vector2::new(mg * r * s, self.k * (r - self.l0) - mg * c),
            Matrix2::new(mg * r * c, mg * s, mg * s, self.k),
        )
    }
}

/// Generalized wind force at `(θ, r)` moving with `(θ̇, ṙ)`, and its
/// derivatives with respect to the coordinates and the rates.
fn wind_force(wind: &PendulumWind, q: &Vector2<f64>, qd: &Vector2<f64>, t: f64) -> (Vector2<f64>, Matrix2<f64>, Matrix2<f64>) {
    let (theta, r) = (q[0], q[1]);
    let (s, c) = theta.sin_cos();
    let x = Vec3::new(r * s, -r * c, 0.0);
    // columns ∂x/∂θ, ∂x/∂r restricted to the plane
    let jac = Matrix2::new(r * c, s, r * s, -c);
    let dj_dtheta = Matrix2::new(-r * s, c, r * c, s);
    let dj_dr = Matrix2::new(c, 0.0, s, 0.0);
    let sample = wind.profile.sample(&x, t);
    let v_inf = Vector2::new(sample.velocity.x, sample.velocity.y);
    let grad = Matrix2::new(
        sample.grad_velocity[(0, 0)],
        sample.grad_velocity[(0, 1)],
        sample.grad_velocity[(1, 0)],
        sample.grad_velocity[(1, 1)],
    );
    let xdot = jac * qd;
    let f = (v_inf - xdot) * wind.drag;
    let q_force = jac.transpose() * f;
    let df_dq = (grad * jac - Matrix2::from_columns(&[dj_dtheta * qd, dj_dr * qd])) * wind.drag;
    let d_coords = Matrix2::from_columns(&[dj_dtheta.transpose() * f, dj_dr.transpose() * f]) + jac.transpose() * df_dq;
    let d_rates = -(jac.transpose() * jac) * wind.drag;
    (q_force, d_coords, d_rates)
}

/// Residual of one step for the increment `dq = q_{n+1} − q_n` and its
/// Jacobian. Working with the increment keeps the rates free of the
/// cancellation in `q_{n+1} − q_n` once `θ` has grown large.
fn step_residual(
    params: &PendulumParams,
    wind: Option<&PendulumWind>,
    t_n: f64,
    dt: f64,
    q0: &Vector2<f64>,
    qd0: &Vector2<f64>,
    dq: &Vector2<f64>,
) -> (Vector2<f64>, Matrix2<f64>) {
    let m = params.mass;
    let q1 = q0 + dq;
    let qd1 = dq * (2.0 / dt) - qd0;
    let qm = q0 + dq * 0.5;
    let qdm = dq / dt;
    let (r0, r1) = (q0[1], q1[1]);
    let (gu0, _) = params.potential_gradient(q0[0], r0);
    let (gu1, hu1) = params.potential_gradient(q1[0], r1);

    let mut res = Vector2::new(
        m * (r1 * r1 * qd1[0] - r0 * r0 * qd0[0]) / dt,
        m * (qd1[1] - qd0[1]) / dt - m * qm[1] * qdm[0] * qdm[0],
    );
    let mut jac = Matrix2::new(
        m * r1 * r1 * 2.0 / (dt * dt),
        2.0 * m * r1 * qd1[0] / dt,
        -2.0 * m * qm[1] * qdm[0] / dt,
        2.0 * m / (dt * dt) - 0.5 * m * qdm[0] * qdm[0],
    );
    res += (gu0 + gu1) * 0.5;
    jac += hu1 * 0.5;
    if let Some(w) = wind {
        let (f, d_coords, d_rates) = wind_force(w, &qm, &qdm, t_n + 0.5 * dt);
        res -= f;
        jac -= d_coords * 0.5 + d_rates / dt;
    }
    (res, jac)
}

/// Advances one step of size `dt` (possibly negative) from `t_n`.
///
/// Returns the new state and the number of Newton iterations.
pub fn pendulum_step(
    params: &PendulumParams,
    wind: Option<&PendulumWind>,
    t_n: f64,
    dt: f64,
    state: &PendulumState,
) -> Result<(PendulumState, usize)> {
    let q0 = Vector2::new(state.theta, params.l0 + state.eta);
    let qd0 = Vector2::new(state.theta_dot, state.eta_dot);
    let mut delta = Vector2::zeros();
    let mut increments = Vec::new();
    let mut residuals = Vec::new();
    loop {
        let (r, k) = step_residual(params, wind, t_n, dt, &q0, &qd0, &delta);
        residuals.push(r.amax());
        let dq = k.lu().solve(&-r).unwrap_or_else(|| Vector2::repeat(f64::NAN));
        let norm = dq.amax();
        increments.push(norm);
        if !norm.is_finite() || (increments.len() >= params.max_newton_iters && norm >= params.newton_tol) {
            return Err(Error::NewtonFailure {
                time: t_n + dt,
                iterations: increments.len(),
                residual_history: residuals,
                increment_history: increments,
            });
        }
        delta += dq;
        if norm < params.newton_tol {
            break;
        }
    }
    let qd = delta * (2.0 / dt) - qd0;
    let next = PendulumState {
        theta: state.theta + delta[0],
        eta: state.eta + delta[1],
        theta_dot: qd[0],
        eta_dot: qd[1],
    };
    Ok((next, increments.len()))
}

/// Time history of a pendulum run.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<PendulumState>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    pub j3: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Time of a Newton failure that ended the run early.
    pub failure: Option<f64>,
}

impl PendulumTrajectory {
    pub fn total_energy(&self) -> Vec<f64> {
        self.kinetic.iter().zip(&self.potential).map(|(t, u)| t + u).collect()
    }
}

/// Integrates the pendulum from `params.initial` to `params.t_end`.
pub fn pendulum_run(params: &PendulumParams, wind: Option<&PendulumWind>) -> Result<PendulumTrajectory> {
    params.validate()?;
    if let Some(w) = wind {
        if !(w.drag >= 0.0) {
            return Err(Error::param("wind_drag", "must be non-negative"));
        }
    }
    let n = params.n_steps();
    let mut traj = PendulumTrajectory {
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        kinetic: Vec::with_capacity(n + 1),
        potential: Vec::with_capacity(n + 1),
        j3: Vec::with_capacity(n + 1),
        iterations: Vec::with_capacity(n + 1),
        failure: None,
    };
    let push = |traj: &mut PendulumTrajectory, t: f64, s: PendulumState, it: usize| {
        let (k, u) = params.energies(&s);
        traj.times.push(t);
        traj.states.push(s);
        traj.kinetic.push(k);
        traj.potential.push(u);
        traj.j3.push(params.angular_momentum(&s));
        traj.iterations.push(it);
    };
    let mut state = params.initial;
    push(&mut traj, 0.0, state, 0);
    for k in 1..=n {
        let t_n = (k - 1) as f64 * params.dt;
        match pendulum_step(params, wind, t_n, params.dt, &state) {
            Ok((s, it)) => {
                state = s;
                push(&mut traj, k as f64 * params.dt, state, it);
            }
            Err(Error::NewtonFailure { time, .. }) => {
                traj.failure = Some(time);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

/// Second precision quotient of `(θ, η)` from runs at `Δt`, `Δt/2` and
/// `Δt/4`, sampled at the time instants of the coarsest run.
pub fn pendulum_precision_quotient(
    params: &PendulumParams,
    wind: Option<&PendulumWind>,
) -> Result<(Vec<f64>, Vec<Option<f64>>)> {
    let mut runs = Vec::with_capacity(3);
    for level in 0..3 {
        let mut p = params.clone();
        p.dt = params.dt / f64::from(1u32 << level);
        let traj = pendulum_run(&p, wind)?;
        if let Some(t) = traj.failure {
            return Err(Error::Series(alloc::format!("run with dt = {} failed at t = {t}", p.dt)));
        }
        let stride = 1usize << level;
        let series: Vec<DVec> = traj
            .states
            .iter()
            .step_by(stride)
            .map(|s| DVec::from_vec(alloc::vec![s.theta, s.eta]))
            .collect();
        runs.push(series);
    }
    let n = runs.iter().map(Vec::len).min().unwrap_or(0);
    let times = (0..n).map(|i| i as f64 * params.dt).collect();
    let q = precision_quotient(&runs[0][..n], &runs[1][..n], &runs[2][..n])?;
    Ok((times, q))
}
