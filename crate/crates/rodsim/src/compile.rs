//! Translation of a parsed scenario into solver objects.
//!
//! Everything that can fail before the first solver step (spline space,
//! constraints, material, load ranges, table files) fails here, so a
//! rejected scenario never creates output files.

use rodsim_core::assembly::{CorrectionEval, Discretization, InternalForceEval, StepScheme};
use rodsim_core::diagnostics::{BeamSection, ProbeBasis};
use rodsim_core::extraction::{BoundaryKind, ConstraintSet};
use rodsim_core::forces::{FlowLoad, FreestreamProfile, FrequencyConvention, LoadCase, TimeFunction};
use rodsim_core::kinematics::MaterialParams;
use rodsim_core::pendulum::{PendulumParams, PendulumState, PendulumWind};
use rodsim_core::spline::SplineSpace;
use rodsim_core::Vec3;

use crate::scenario::*;
use crate::table::read_table;

fn core_err(key: &str) -> impl Fn(rodsim_core::Error) -> ScenarioError + '_ {
    move |e| ScenarioError::semantic(key, e.to_string())
}

fn v3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn support(s: Support) -> BoundaryKind {
    match s {
        Support::Free => BoundaryKind::Free,
        Support::Pinned => BoundaryKind::Pinned,
        Support::Clamped => BoundaryKind::Clamped,
    }
}

/// Material of a section with the rotary-inertia factor `alpha`.
pub fn material(section: &SectionSpec, alpha: f64, prefix: &str) -> Result<MaterialParams, ScenarioError> {
    let key = format!("{prefix}.section");
    match *section {
        SectionSpec::Direct { ea, ei, a_rho, i_rho } => MaterialParams::new(ea, ei, a_rho, i_rho, alpha),
        SectionSpec::Circular { youngs_modulus, density, diameter } => {
            MaterialParams::circular(youngs_modulus, density, diameter).and_then(|m| m.with_alpha(alpha))
        }
    }
    .map_err(core_err(&key))
}

/// Discretization of the rod with `elements` elements.
pub fn discretization(rod: &RodSpec, elements: usize) -> Result<Discretization, ScenarioError> {
    let space = SplineSpace::new(rod.degree, rod.continuity, elements, rod.length).map_err(core_err("rod.continuity"))?;
    let dir = v3(&rod.direction).normalize();
    let q_ref = Discretization::straight_coefficients(&space, &v3(&rod.origin), &dir);
    let (os, oe) = match rod.outlier_removal {
        OutlierRemoval::Off => (false, false),
        OutlierRemoval::On => (true, true),
        OutlierRemoval::Start => (true, false),
        OutlierRemoval::End => (false, true),
    };
    let set = ConstraintSet::for_supports(rod.degree, support(rod.support_start), support(rod.support_end), os, oe);
    Discretization::new(space, &set, q_ref, None).map_err(core_err("rod.outlier_removal"))
}

fn time_fn(t_c: Option<f64>) -> TimeFunction {
    t_c.map_or(TimeFunction::Constant, |t_c| TimeFunction::Vanishing { t_c })
}

pub fn convention(c: Convention) -> FrequencyConvention {
    match c {
        Convention::Printed => FrequencyConvention::Printed,
        Convention::Angular => FrequencyConvention::Angular,
    }
}

/// Load cases of the scenario, validated against the rod length.
pub fn loads(specs: &[LoadSpec], length: f64) -> Result<Vec<LoadCase>, ScenarioError> {
    specs
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let key = format!("load.{}", i + 1);
            let case = match l {
                LoadSpec::Point { s, force, t_c } => LoadCase::PointLoad { s: *s, force: v3(force), time: time_fn(*t_c) },
                LoadSpec::Gravity { g } => LoadCase::Gravity { g: v3(g) },
                LoadSpec::Follower { f0, t_c } => LoadCase::Follower2D { f0: *f0, time: time_fn(*t_c) },
                LoadSpec::TipMoment { moment, t_c } => LoadCase::TipMoment { moment: v3(moment), time: time_fn(*t_c) },
                LoadSpec::Pulsating { s, amplitude, frequency_hz, convention: c, direction } => LoadCase::Pulsating {
                    s: *s,
                    amplitude: *amplitude,
                    frequency_hz: *frequency_hz,
                    convention: convention(*c),
                    direction: v3(direction),
                },
                LoadSpec::Flow { c_m, c_n, c_t, rho_f, diameter, profile } => {
                    let profile = match profile {
                        ProfileSpec::Still => FreestreamProfile::Still,
                        ProfileSpec::Uniform { velocity } => FreestreamProfile::Uniform { velocity: v3(velocity) },
                        ProfileSpec::Rotating { v0, beta0, length } => {
                            FreestreamProfile::RotatingWind { v0: *v0, beta0: *beta0, length: *length }
                        }
                        ProfileSpec::Parabolic { c, modulation, omega } => {
                            FreestreamProfile::ParabolicWind { c: *c, modulation: *modulation, omega: *omega }
                        }
                        ProfileSpec::Table { file } => read_table(file)?,
                    };
                    LoadCase::Flow(FlowLoad { c_m: *c_m, c_n: *c_n, c_t: *c_t, rho_f: *rho_f, diameter: *diameter, profile })
                }
            };
            case.validate(length).map_err(core_err(&key))?;
            Ok(case)
        })
        .collect()
}

pub fn scheme(s: &SchemeSpec) -> StepScheme {
    StepScheme {
        correction: match s.correction {
            Correction::Midpoint => CorrectionEval::Midpoint,
            Correction::EndpointAverage => CorrectionEval::EndpointAverage,
        },
        internal: match s.internal_forces {
            InternalForces::Trapezoidal => InternalForceEval::Trapezoidal,
            InternalForces::Midpoint => InternalForceEval::Midpoint,
        },
    }
}

/// Closed-form equilibrium of a clamped cantilever under a constant tip
/// moment perpendicular to its axis: a circular arc of radius `EI/|M|`.
#[derive(Debug, Clone, Copy)]
pub struct CircleReference {
    pub origin: Vec3,
    pub direction: Vec3,
    /// Unit vector toward which the rod curls.
    pub normal: Vec3,
    pub radius: f64,
}

impl CircleReference {
    pub fn eval(&self, s: f64) -> (Vec3, Vec3, Vec3) {
        let a = s / self.radius;
        let (sn, c) = a.sin_cos();
        let x = self.origin + self.direction * (self.radius * sn) + self.normal * (self.radius * (1.0 - c));
        let d1 = self.direction * c + self.normal * sn;
        let d2 = (self.normal * c - self.direction * sn) / self.radius;
        (x, d1, d2)
    }
}

pub fn circle_reference(rod: &RodSpec, load_specs: &[LoadSpec], mat: &MaterialParams) -> Result<CircleReference, ScenarioError> {
    let err = |m: &str| ScenarioError::semantic("convergence.reference", m.to_string());
    if rod.support_start != Support::Clamped {
        return Err(err("the circle reference needs rod.support_start = clamped"));
    }
    let moment = match load_specs {
        [LoadSpec::TipMoment { moment, t_c: None }] => v3(moment),
        _ => return Err(err("the circle reference needs exactly one constant tip_moment load")),
    };
    let d = v3(&rod.direction).normalize();
    let m = moment.norm();
    if !(m > 0.0) || moment.dot(&d).abs() > 1e-12 * m {
        return Err(err("the tip moment must be nonzero and perpendicular to rod.direction"));
    }
    Ok(CircleReference { origin: v3(&rod.origin), direction: d, normal: (moment / m).cross(&d), radius: mat.ei / m })
}

pub fn pendulum(p: &PendulumSpec, t: &TimeSpec) -> Result<(PendulumParams, Option<PendulumWind>), ScenarioError> {
    let params = PendulumParams {
        l0: p.l0,
        k: p.k,
        mass: p.mass,
        g: p.g,
        dt: t.dt,
        t_end: t.t_end,
        initial: PendulumState { theta: p.theta, eta: p.eta, theta_dot: p.theta_dot, eta_dot: p.eta_dot },
        newton_tol: t.newton_tol,
        max_newton_iters: t.max_newton_iters,
    };
    params.validate().map_err(core_err("pendulum"))?;
    let wind = match p.wind {
        PendulumWindSpec::Off => None,
        PendulumWindSpec::Parabolic { c, modulation, omega, drag } => {
            Some(PendulumWind { profile: FreestreamProfile::ParabolicWind { c, modulation, omega }, drag })
        }
    };
    Ok((params, wind))
}

pub fn probe_basis(kind: ProbeBasisKind, p: &ProbeSpec) -> ProbeBasis {
    match kind {
        ProbeBasisKind::Hermite => ProbeBasis::CubicHermite,
        ProbeBasisKind::Spline => ProbeBasis::Spline { p: p.degree, r: p.continuity, outlier_removal: false },
        ProbeBasisKind::SplineOutlier => ProbeBasis::Spline { p: p.degree, r: p.continuity, outlier_removal: true },
    }
}

pub fn beam_section(p: &ProbeSpec) -> Result<BeamSection, ScenarioError> {
    let m = material(&p.section, 1.0, "probe")?;
    Ok(BeamSection { ei: m.ei, a_rho: m.a_rho, length: p.length })
}
