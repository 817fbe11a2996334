//! External load models and their configuration derivatives.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed when std is in the dependency graph
use num_traits::Float;

use crate::kinematics::PointKinematics;
use crate::linalg::{abs_times, abs_times_jacobian, outer, skew};
use crate::{Error, Mat3, Result, Vec3};

/// Scalar time modulation of a load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFunction {
    Constant,
    /// Triangular pulse peaking at `t_c / 2` and vanishing from `t_c` on.
    Vanishing { t_c: f64 },
}

impl TimeFunction {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant => 1.0,
            TimeFunction::Vanishing { t_c } => vanishing_factor(t, t_c),
        }
    }
}

fn vanishing_factor(t: f64, t_c: f64) -> f64 {
    if t <= 0.5 * t_c {
        t / (0.5 * t_c)
    } else if t <= t_c {
        2.0 / t_c * (t_c - t)
    } else {
        0.0
    }
}

/// Point load that rises linearly to `F_c` at `t_c / 2` and returns to zero
/// at `t_c`.
pub fn vanishing_point_load(t: f64, t_c: f64, f_c: &Vec3) -> Vec3 {
    f_c * vanishing_factor(t, t_c)
}

/// How the frequency parameter of a pulsating force enters the sine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyConvention {
    /// `sin((ω/2π) t)` with `ω = 2π f`, i.e. the argument is `f t`.
    Printed,
    /// `sin(2π f t)`, so `f` is the physical frequency in Hz.
    Angular,
}

/// `A_F sin((ω_F / 2π) t) E₁`.
pub fn pulsating_force(t: f64, a_f: f64, omega_f: f64) -> Vec3 {
    Vec3::x() * (a_f * (omega_f / (2.0 * core::f64::consts::PI) * t).sin())
}

/// Pulsating force for a driving frequency `f_hz` under `convention`.
pub fn pulsating_force_hz(t: f64, a_f: f64, f_hz: f64, convention: FrequencyConvention, direction: &Vec3) -> Vec3 {
    let arg = match convention {
        FrequencyConvention::Printed => f_hz * t,
        FrequencyConvention::Angular => 2.0 * core::f64::consts::PI * f_hz * t,
    };
    direction * (a_f * arg.sin())
}

/// Wind of constant speed `v0` whose direction turns linearly with height,
/// from angle `β₀` at `z = 0` to `−β₀` at `z = L`.
pub fn rotating_wind_profile(z: f64, v0: f64, beta0: f64, length: f64) -> Vec3 {
    let a = beta0 - 2.0 * beta0 * z / length;
    Vec3::new(a.cos(), a.sin(), 0.0) * v0
}

/// Free-stream velocity field of the surrounding fluid.
#[derive(Debug, Clone, PartialEq)]
pub enum FreestreamProfile {
    Still,
    Uniform { velocity: Vec3 },
    RotatingWind { v0: f64, beta0: f64, length: f64 },
    /// `c x₁² (1 + a sin(ω t)) E₂`.
    ParabolicWind { c: f64, modulation: f64, omega: f64 },
    /// Piecewise linear speed in `z` along a fixed unit direction.
    Table { z: Vec<f64>, speed: Vec<f64>, direction: Vec3 },
}

/// Velocity, acceleration and their spatial gradients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreestreamSample {
    pub velocity: Vec3,
    pub accel: Vec3,
    /// `∂V∞/∂x`.
    pub grad_velocity: Mat3,
    /// `∂a∞/∂x`.
    pub grad_accel: Mat3,
}

impl FreestreamProfile {
    /// Table profile from `(z, speed)` samples; `z` must be strictly increasing.
    pub fn table(z: Vec<f64>, speed: Vec<f64>, direction: Vec3) -> Result<Self> {
        if z.len() != speed.len() || z.is_empty() {
            return Err(Error::param("freestream_table", "z and speed columns must be non-empty and of equal length"));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("freestream_table", "z must be strictly increasing"));
        }
        let n = direction.norm();
        if !(n > 0.0) {
            return Err(Error::param("freestream_table", "direction must be nonzero"));
        }
        Ok(FreestreamProfile::Table { z, speed, direction: direction / n })
    }

    pub fn sample(&self, x: &Vec3, t: f64) -> FreestreamSample {
        let zero = FreestreamSample {
            velocity: Vec3::zeros(),
            accel: Vec3::zeros(),
            grad_velocity: Mat3::zeros(),
            grad_accel: Mat3::zeros(),
        };
        match self {
            FreestreamProfile::Still => zero,
            FreestreamProfile::Uniform { velocity } => FreestreamSample { velocity: *velocity, ..zero },
            FreestreamProfile::RotatingWind { v0, beta0, length } => {
                let a = beta0 - 2.0 * beta0 * x.z / length;
                let dv_dz = Vec3::new(a.sin(), -a.cos(), 0.0) * (v0 * 2.0 * beta0 / length);
                FreestreamSample {
                    velocity: rotating_wind_profile(x.z, *v0, *beta0, *length),
                    grad_velocity: outer(&dv_dz, &Vec3::z()),
                    ..zero
                }
            }
            FreestreamProfile::ParabolicWind { c, modulation, omega } => {
                let mt = 1.0 + modulation * (omega * t).sin();
                let mdot = modulation * omega * (omega * t).cos();
                let x1 = x.x;
                FreestreamSample {
                    velocity: Vec3::y() * (c * x1 * x1 * mt),
                    accel: Vec3::y() * (c * x1 * x1 * mdot),
                    grad_velocity: outer(&Vec3::y(), &Vec3::x()) * (2.0 * c * x1 * mt),
                    grad_accel: outer(&Vec3::y(), &Vec3::x()) * (2.0 * c * x1 * mdot),
                }
            }
            FreestreamProfile::Table { z, speed, direction } => {
                let (v, slope) = interpolate(z, speed, x.z);
                FreestreamSample {
                    velocity: direction * v,
                    grad_velocity: outer(&(direction * slope), &Vec3::z()),
                    ..zero
                }
            }
        }
    }
}

/// Linear interpolation with constant extension; returns value and slope.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    if xs.len() == 1 || x <= xs[0] {
        return (ys[0], 0.0);
    }
    if x >= xs[xs.len() - 1] {
        return (ys[ys.len() - 1], 0.0);
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    (ys[i] + slope * (x - xs[i]), slope)
}

/// Hydrodynamic coefficients of a circular rod in a fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowLoad {
    /// Added-mass coefficient `C_M`.
    pub c_m: f64,
    /// Normal drag coefficient `C_N`.
    pub c_n: f64,
    /// Tangential drag coefficient `C_T`.
    pub c_t: f64,
    /// Fluid density (kg/m³).
    pub rho_f: f64,
    /// Rod diameter (m).
    pub diameter: f64,
    pub profile: FreestreamProfile,
}

/// Per-length coefficients `C₁ = ¼π C_M ρ_f ∅²`, `C₂ = ½ C_N ρ_f ∅`,
/// `C₃ = ½ C_T ρ_f ∅`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl FlowLoad {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C_M", self.c_m), ("C_N", self.c_n), ("C_T", self.c_t), ("rho_f", self.rho_f)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.diameter > 0.0) {
            return Err(Error::param("diameter", format!("must be positive, got {}", self.diameter)));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> FlowCoefficients {
        FlowCoefficients {
            c1: 0.25 * core::f64::consts::PI * self.c_m * self.rho_f * self.diameter * self.diameter,
            c2: 0.5 * self.c_n * self.rho_f * self.diameter,
            c3: 0.5 * self.c_t * self.rho_f * self.diameter,
        }
    }
}

/// Flow force density and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowForcePoint {
    pub force: Vec3,
    /// Added-mass part `C₁ P_d (a∞ − φ̈)`.
    pub added_mass: Vec3,
    /// Normal drag `C₂ |P_d V| P_d V`.
    pub normal_drag: Vec3,
    /// Tangential drag `C₃ |(d⊗d)V| (d⊗d)V`.
    pub tangential_drag: Vec3,
    pub d_position: Mat3,
    pub d_tangent: Mat3,
    pub d_velocity: Mat3,
    pub d_accel: Mat3,
}

/// Derivative of `P_d b` with respect to `φ'` at fixed `b`.
fn projector_derivative(kin: &PointKinematics, b: &Vec3) -> Mat3 {
    -(kin.p_d * kin.d.dot(b) + outer(&kin.d, &(kin.p_d * b))) / kin.jac
}

/// Added mass, normal and tangential drag per unit length at position `x`
/// moving with velocity `phi_dot` and acceleration `phi_ddot`, with
/// `V = V∞ − φ̇`. Drag Jacobians use the exact zero limit at `V = 0`.
pub fn flow_force_point(
    kin: &PointKinematics,
    x: &Vec3,
    phi_dot: &Vec3,
    phi_ddot: &Vec3,
    profile: &FreestreamProfile,
    t: f64,
    coeffs: &FlowCoefficients,
) -> FlowForcePoint {
    let fs = profile.sample(x, t);
    let rel_v = fs.velocity - phi_dot;
    let rel_a = fs.accel - phi_ddot;
    let dd = outer(&kin.d, &kin.d);
    let y = kin.p_d * rel_v;
    let z = dd * rel_v;
    let jy = abs_times_jacobian(&y) * coeffs.c2;
    let jz = abs_times_jacobian(&z) * coeffs.c3;
    let added_mass = kin.p_d * rel_a * coeffs.c1;
    let normal_drag = abs_times(&y) * coeffs.c2;
    let tangential_drag = abs_times(&z) * coeffs.c3;
    let dy_du = projector_derivative(kin, &rel_v);
    FlowForcePoint {
        force: added_mass + normal_drag + tangential_drag,
        added_mass,
        normal_drag,
        tangential_drag,
        d_position: kin.p_d * fs.grad_accel * coeffs.c1 + jy * kin.p_d * fs.grad_velocity + jz * dd * fs.grad_velocity,
        d_tangent: projector_derivative(kin, &rel_a) * coeffs.c1 + (jy - jz) * dy_du,
        d_velocity: -(jy * kin.p_d + jz * dd),
        d_accel: -kin.p_d * coeffs.c1,
    }
}

/// Follower force density `f₀ (E₂ × d)` and its derivative with respect to
/// `φ'`, `(f₀/|φ'|) [E₂]ₓ P_d`.
pub fn follower_force_2d(kin: &PointKinematics, f0: f64) -> (Vec3, Mat3) {
    let e2 = Vec3::y();
    (e2.cross(&kin.d) * f0, skew(&e2) * kin.p_d * (f0 / kin.jac))
}

/// Generalized force of a moment `m̄` applied through the end director,
/// conjugate to `δφ'`: `(m̄ × d)/|φ'|`, and its derivative with respect to
/// `φ'`.
pub fn tip_moment_load(kin: &PointKinematics, m_bar: &Vec3) -> (Vec3, Mat3) {
    let j = kin.jac;
    let md = m_bar.cross(&kin.d);
    (md / j, (skew(m_bar) - 2.0 * outer(&md, &kin.d)) / (j * j))
}

/// External load acting on the rod. Magnitudes are scaled by the load
/// factor in static analyses.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadCase {
    PointLoad { s: f64, force: Vec3, time: TimeFunction },
    /// Distributed weight `A_ρ g`.
    Gravity { g: Vec3 },
    /// Distributed in-plane follower force `f₀ (E₂ × d)`.
    Follower2D { f0: f64, time: TimeFunction },
    /// Moment applied at `s = L`.
    TipMoment { moment: Vec3, time: TimeFunction },
    /// Sinusoidal point force.
    Pulsating {
        s: f64,
        amplitude: f64,
        frequency_hz: f64,
        convention: FrequencyConvention,
        direction: Vec3,
    },
    Flow(FlowLoad),
}

impl LoadCase {
    pub fn validate(&self, length: f64) -> Result<()> {
        let check_s = |s: f64| {
            if (0.0..=length).contains(&s) {
                Ok(())
            } else {
                Err(Error::param("s", format!("load position {s} outside [0, {length}]")))
            }
        };
        match self {
            LoadCase::PointLoad { s, time, .. } => {
                check_s(*s)?;
                check_time(time)
            }
            LoadCase::Pulsating { s, amplitude, .. } => {
                check_s(*s)?;
                if *amplitude < 0.0 {
                    return Err(Error::param("amplitude", "must be non-negative"));
                }
                Ok(())
            }
            LoadCase::Follower2D { time, .. } | LoadCase::TipMoment { time, .. } => check_time(time),
            LoadCase::Gravity { .. } => Ok(()),
            LoadCase::Flow(f) => f.validate(),
        }
    }

    /// Whether the load vanishes identically from time `t` on.
    pub fn vanished_after(&self, t: f64) -> bool {
        match self {
            LoadCase::PointLoad { time, .. } | LoadCase::Follower2D { time, .. } | LoadCase::TipMoment { time, .. } => {
                matches!(time, TimeFunction::Vanishing { t_c } if t >= *t_c)
            }
            LoadCase::Pulsating { amplitude, .. } => *amplitude == 0.0,
            LoadCase::Gravity { g } => g.norm() == 0.0,
            LoadCase::Flow(_) => false,
        }
    }
}

fn check_time(time: &TimeFunction) -> Result<()> {
    match time {
        TimeFunction::Vanishing { t_c } if !(*t_c > 0.0) => Err(Error::param("t_c", "must be positive")),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd(f: impl Fn(&Vec3) -> Vec3, x: &Vec3) -> Mat3 {
        let h = 1e-6;
        let mut m = Mat3::zeros();
        for c in 0..3 {
            let mut e = Vec3::zeros();
            e[c] = h;
            m.set_column(c, &((f(&(x + e)) - f(&(x - e))) / (2.0 * h)));
        }
        m
    }

    fn kin(u: &Vec3) -> PointKinematics {
        PointKinematics::new(u, &Vec3::zeros(), 0.0).unwrap()
    }

    fn v3() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    fn tangent() -> impl Strategy<Value = Vec3> {
        (v3(), 0.5f64..2.0).prop_filter_map("zero", |(v, l)| (v.norm() > 1e-2).then(|| v * (l / v.norm())))
    }

    #[test]
    fn vanishing_load_shape() {
        let f = Vec3::new(0.0, 30.0, 0.0);
        assert_eq!(vanishing_point_load(0.25, 0.5, &f), f);
        assert_eq!(vanishing_point_load(0.5, 0.5, &f), Vec3::zeros());
        assert!((vanishing_point_load(0.375, 0.5, &f) - f * 0.5).norm() < 1e-14);
        assert_eq!(vanishing_point_load(3.0, 0.5, &f), Vec3::zeros());
    }

    #[test]
    fn pulsating_sign_pattern() {
        let a = 350e3;
        assert_eq!(pulsating_force(0.0, a, 1.0), Vec3::zeros());
        // with ω = 2π the printed argument is t, so one period spans 2π seconds
        let w = 2.0 * core::f64::consts::PI;
        let q = 0.5 * core::f64::consts::PI;
        let vals: Vec<f64> = (1..=4).map(|k| pulsating_force(k as f64 * q, a, w).x).collect();
        assert!(vals[0] > 0.0 && vals[1].abs() < 1e-9 * a && vals[2] < 0.0 && vals[3].abs() < 1e-9 * a);
        for k in 0..10_000 {
            assert!(pulsating_force(k as f64 * 0.0137, a, 5.5).norm() <= a);
        }
        let f = pulsating_force_hz(0.25, 1.0, 1.0, FrequencyConvention::Angular, &Vec3::x());
        assert!((f.x - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotating_wind_values() {
        let b = 45f64.to_radians();
        assert!((rotating_wind_profile(5.0, 10.0, b, 10.0) - Vec3::new(10.0, 0.0, 0.0)).norm() < 1e-14);
        let v = rotating_wind_profile(0.0, 10.0, b, 10.0);
        assert!((v - Vec3::new(b.cos(), b.sin(), 0.0) * 10.0).norm() < 1e-14);
        for k in 0..50 {
            assert!((rotating_wind_profile(k as f64 * 0.3, 10.0, b, 10.0).norm() - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_gradients_match_differences() {
        let profiles = [
            FreestreamProfile::RotatingWind { v0: 10.0, beta0: 0.7, length: 2.0 },
            FreestreamProfile::ParabolicWind { c: 1.0, modulation: 0.1, omega: 3.0 },
            FreestreamProfile::table(alloc::vec![0.0, 1.0, 3.0], alloc::vec![0.0, 2.0, 1.0], Vec3::new(1.0, 1.0, 0.0)).unwrap(),
        ];
        let x = Vec3::new(0.3, -0.2, 1.7);
        for p in &profiles {
            let s = p.sample(&x, 0.4);
            assert!((s.grad_velocity - fd(|y| p.sample(y, 0.4).velocity, &x)).amax() < 1e-7);
            assert!((s.grad_accel - fd(|y| p.sample(y, 0.4).accel, &x)).amax() < 1e-7);
            let h = 1e-6;
            let at = (p.sample(&x, 0.4 + h).velocity - p.sample(&x, 0.4 - h).velocity) / (2.0 * h);
            assert!((s.accel - at).norm() < 1e-7);
        }
        let still = FreestreamProfile::Still.sample(&x, 1.0);
        assert_eq!(still.velocity, Vec3::zeros());
        assert_eq!(still.accel, Vec3::zeros());
    }

    #[test]
    fn still_fluid_rest_and_normal_motion() {
        let c = FlowLoad { c_m: 1.0, c_n: 1.2, c_t: 0.1, rho_f: 1000.0, diameter: 0.04, profile: FreestreamProfile::Still };
        let co = c.coefficients();
        let k = kin(&Vec3::z());
        let f = flow_force_point(&k, &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &c.profile, 0.0, &co);
        assert_eq!(f.force, Vec3::zeros());
        assert_eq!(f.d_velocity, Mat3::zeros());
        let v = 2.5;
        let f = flow_force_point(&k, &Vec3::zeros(), &(Vec3::x() * v), &Vec3::zeros(), &c.profile, 0.0, &co);
        assert!((f.normal_drag + Vec3::x() * (co.c2 * v * v)).norm() < 1e-12);
        assert_eq!(f.tangential_drag, Vec3::zeros());
    }

    #[test]
    fn follower_and_moment_simple_values() {
        let k = kin(&Vec3::z());
        assert_eq!(follower_force_2d(&k, 1.0).0, Vec3::x());
        let (f, t) = follower_force_2d(&k, 0.0);
        assert_eq!((f, t), (Vec3::zeros(), Mat3::zeros()));
        assert_eq!(tip_moment_load(&k, &Vec3::z()).0, Vec3::zeros());
        assert!((10.0 * core::f64::consts::PI - 2.0 * 200.0 * core::f64::consts::PI / 40.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn follower_and_moment_tangents(u in tangent(), m in v3(), f0 in -3.0f64..3.0) {
            let (_, t) = follower_force_2d(&kin(&u), f0);
            let n = fd(|x| follower_force_2d(&kin(x), f0).0, &u);
            prop_assert!((t - n).amax() < 1e-6 * (1.0 + n.amax()));
            let (_, t) = tip_moment_load(&kin(&u), &m);
            let n = fd(|x| tip_moment_load(&kin(x), &m).0, &u);
            prop_assert!((t - n).amax() < 1e-6 * (1.0 + n.amax()));
        }

        #[test]
        fn tip_moment_is_virtual_work_of_director(u in tangent(), m in v3(), du in v3()) {
            // m̄·(d × δd) with δd = P_d δφ'/|φ'|
            let k = kin(&u);
            let dd = k.p_d * du / k.jac;
            let (g, _) = tip_moment_load(&k, &m);
            prop_assert!((g.dot(&du) - m.dot(&k.d.cross(&dd))).abs() < 1e-12);
        }

        #[test]
        fn flow_tangents(u in tangent(), x in v3(), vel in v3(), acc in v3(), t in 0.0f64..3.0) {
            let load = FlowLoad { c_m: 1.0, c_n: 1.2, c_t: 0.3, rho_f: 1000.0, diameter: 0.04,
                profile: FreestreamProfile::RotatingWind { v0: 1.5, beta0: 0.8, length: 2.0 } };
            let co = load.coefficients();
            let p = &load.profile;
            let f = |u: &Vec3, x: &Vec3, v: &Vec3, a: &Vec3| flow_force_point(&kin(u), x, v, a, p, t, &co);
            let base = f(&u, &x, &vel, &acc);
            let cases = [
                (base.d_tangent, fd(|y| f(y, &x, &vel, &acc).force, &u)),
                (base.d_position, fd(|y| f(&u, y, &vel, &acc).force, &x)),
                (base.d_velocity, fd(|y| f(&u, &x, y, &acc).force, &vel)),
                (base.d_accel, fd(|y| f(&u, &x, &vel, y).force, &acc)),
            ];
            for (a, n) in cases {
                prop_assert!((a - n).amax() < 1e-5 * (1.0 + n.amax()), "{a} vs {n}");
            }
        }

        #[test]
        fn flow_decomposition_and_damping(u in tangent(), vel in v3()) {
            let k = kin(&u);
            let dd = outer(&k.d, &k.d);
            prop_assert!((k.p_d * vel + dd * vel - vel).amax() < 1e-12);
            let load = FlowLoad { c_m: 1.0, c_n: 1.2, c_t: 0.3, rho_f: 1.2, diameter: 0.01, profile: FreestreamProfile::Still };
            let f = flow_force_point(&k, &Vec3::zeros(), &vel, &Vec3::zeros(), &load.profile, 0.0, &load.coefficients());
            prop_assert!(f.force.dot(&vel) <= 0.0);
        }
    }
}
