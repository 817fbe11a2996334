//! Load stepping with Newton–Raphson for static equilibria.

use alloc::vec::Vec;

use crate::assembly::{assemble_static, Discretization};
use crate::forces::LoadCase;
use crate::kinematics::MaterialParams;
use crate::{DVec, Error, Result};

/// Static analysis with a uniform load factor `λ_k = k / n_load_steps`.
#[derive(Debug, Clone)]
pub struct StaticProblem<'a> {
    pub disc: &'a Discretization,
    pub material: MaterialParams,
    pub loads: Vec<LoadCase>,
    pub n_load_steps: usize,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

/// Converged configuration of one load step.
#[derive(Debug, Clone)]
pub struct StaticStep {
    pub load_factor: f64,
    /// Reduced coordinates.
    pub q_red: DVec,
    /// Full coefficients.
    pub q: DVec,
    pub iterations: usize,
    pub increment_history: Vec<f64>,
    /// Reduced residual max-norm at the converged state.
    pub residual_norm: f64,
}

impl<'a> StaticProblem<'a> {
    pub fn new(disc: &'a Discretization, material: MaterialParams, loads: Vec<LoadCase>, n_load_steps: usize) -> Self {
        Self {
            disc,
            material,
            loads,
            n_load_steps,
            newton_tol: 1e-10,
            max_newton_iters: 50,
        }
    }
}

/// Solves all load steps starting from the reduced state `q0_red`; each
/// converged step seeds the next.
pub fn solve_static(problem: &StaticProblem, q0_red: &DVec) -> Result<Vec<StaticStep>> {
    if problem.n_load_steps == 0 {
        return Err(Error::param("n_load_steps", "must be at least 1"));
    }
    if !(problem.newton_tol > 0.0) {
        return Err(Error::param("newton_tol", "must be positive"));
    }
    for l in &problem.loads {
        l.validate(problem.disc.space().length())?;
    }
    let mut q = q0_red.clone();
    let mut out = Vec::with_capacity(problem.n_load_steps);
    for k in 1..=problem.n_load_steps {
        let lambda = k as f64 / problem.n_load_steps as f64;
        let mut increments = Vec::new();
        let mut residuals = Vec::new();
        loop {
            let sys = assemble_static(problem.disc, &q, &problem.loads, lambda, &problem.material)?;
            residuals.push(sys.residual.amax());
            let dq = sys.tangent.lu()?.solve(&(-&sys.residual));
            let norm = dq.amax();
            q += &dq;
            increments.push(norm);
            if !norm.is_finite() || increments.len() >= problem.max_newton_iters && norm >= problem.newton_tol {
                return Err(Error::NewtonFailure {
                    time: lambda,
                    iterations: increments.len(),
                    residual_history: residuals,
                    increment_history: increments,
                });
            }
            if norm < problem.newton_tol {
                break;
            }
        }
        let residual_norm = assemble_static(problem.disc, &q, &problem.loads, lambda, &problem.material)?
            .residual
            .amax();
        out.push(StaticStep {
            load_factor: lambda,
            q: problem.disc.expand(&q),
            q_red: q.clone(),
            iterations: increments.len(),
            increment_history: increments,
            residual_norm,
        });
    }
    Ok(out)
}
