//! Conserved quantities, error norms, convergence quotients, the linear
//! beam propagator determinant and steady-state statistics.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::LU;
#[allow(unused_imports)] // shadowed when std is in the dependency graph
use num_traits::Float;

use crate::assembly::{energies as state_energies, momenta as state_momenta, Discretization};
use crate::extraction::{build_extraction, BoundaryKind, ConstraintSet};
use crate::kinematics::MaterialParams;
use crate::quadrature::gauss_rule;
use crate::spline::SplineSpace;
use crate::{DMat, DVec, Error, Result, Vec3};

/// Energies and momenta of one stored state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub linear_momentum: Vec3,
    pub angular_momentum: Vec3,
}

impl DiagnosticsRecord {
    pub fn new(t: f64, kinetic: f64, potential: f64, linear_momentum: Vec3, angular_momentum: Vec3) -> Self {
        Self {
            t,
            kinetic,
            potential,
            total: kinetic + potential,
            linear_momentum,
            angular_momentum,
        }
    }
}

/// Kinetic and strain energy `(T, U)` of full coefficients `q`, `q̇`.
pub fn energies(disc: &Discretization, q: &DVec, qdot: &DVec, mat: &MaterialParams) -> Result<(f64, f64)> {
    let e = state_energies(disc, q, qdot, mat)?;
    Ok((e.kinetic, e.potential))
}

/// Linear and angular momentum (about the origin) of full coefficients.
pub fn momenta(disc: &Discretization, q: &DVec, qdot: &DVec, mat: &MaterialParams) -> Result<(Vec3, Vec3)> {
    state_momenta(disc, q, qdot, mat)
}

/// Parametric reference curve returning `(φ, φ', φ'')` at `s`.
pub trait ReferenceCurve {
    fn eval(&self, s: f64) -> (Vec3, Vec3, Vec3);
}

impl<F: Fn(f64) -> (Vec3, Vec3, Vec3)> ReferenceCurve for F {
    fn eval(&self, s: f64) -> (Vec3, Vec3, Vec3) {
        self(s)
    }
}

/// Relative errors in the L² norm and the H¹ and H² semi-norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Relative errors of the curve with coefficients `q` against `reference`,
/// integrated with `p + 3` Gauss points per element.
pub fn error_norms(space: &SplineSpace, q: &DVec, reference: &impl ReferenceCurve) -> Result<ErrorNorms> {
    let rule = gauss_rule(space.degree() + 3)?;
    let mut err = [0.0; 3];
    let mut norm = [0.0; 3];
    for e in 0..space.n_elements() {
        let (a, b) = space.element_bounds(e);
        for (s, w) in rule.mapped(a, b) {
            let basis = space.eval_in_element(e, s, 2);
            let mut f = [Vec3::zeros(); 3];
            for k in 0..basis.values.len() {
                let i = 3 * (basis.first_index + k);
                let c = Vec3::new(q[i], q[i + 1], q[i + 2]);
                f[0] += c * basis.values[k];
                f[1] += c * basis.d1[k];
                f[2] += c * basis.d2[k];
            }
            let (r0, r1, r2) = reference.eval(s);
            for (i, r) in [r0, r1, r2].iter().enumerate() {
                err[i] += w * (f[i] - r).norm_squared();
                norm[i] += w * r.norm_squared();
            }
        }
    }
    let rel = |i: usize| {
        if norm[i] > 0.0 {
            (err[i] / norm[i]).sqrt()
        } else {
            err[i].sqrt()
        }
    };
    Ok(ErrorNorms { l2: rel(0), h1: rel(1), h2: rel(2) })
}

/// Pointwise second precision quotient
/// `‖u_Δt − u_Δt/2‖ / ‖u_Δt/2 − u_Δt/4‖` of three runs sampled at common
/// times. Samples with a vanishing denominator are masked (`None`).
pub fn precision_quotient(u_dt: &[DVec], u_dt2: &[DVec], u_dt4: &[DVec]) -> Result<Vec<Option<f64>>> {
    if u_dt.len() != u_dt2.len() || u_dt.len() != u_dt4.len() {
        return Err(Error::Series(format!(
            "series lengths differ: {}, {}, {}",
            u_dt.len(),
            u_dt2.len(),
            u_dt4.len()
        )));
    }
    Ok(u_dt
        .iter()
        .zip(u_dt2)
        .zip(u_dt4)
        .map(|((a, b), c)| {
            let den = (b - c).norm();
            if den > 0.0 {
                Some((a - b).norm() / den)
            } else {
                None
            }
        })
        .collect())
}

/// Discretization used by the linear beam probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeBasis {
    /// Classical nodal cubic Hermite elements (deflection and slope dofs).
    CubicHermite,
    /// Spline space of degree `p` and continuity `r`, optionally with
    /// outlier constraints at both free ends.
    Spline { p: usize, r: usize, outlier_removal: bool },
}

/// Bending stiffness and mass per length of the linear beam probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSection {
    pub ei: f64,
    pub a_rho: f64,
    pub length: f64,
}

/// Mass and stiffness matrices of the free-free Euler–Bernoulli beam.
pub fn linear_beam_matrices(basis: ProbeBasis, n_elements: usize, section: &BeamSection) -> Result<(DMat, DMat)> {
    match basis {
        ProbeBasis::CubicHermite => Ok(hermite_matrices(n_elements, section)),
        ProbeBasis::Spline { p, r, outlier_removal } => {
            let space = SplineSpace::new(p, r, n_elements, section.length)?;
            let m = space.dim();
            let rule = gauss_rule(p + 1)?;
            let mut mm = DMat::zeros(m, m);
            let mut kk = DMat::zeros(m, m);
            for e in 0..n_elements {
                let (a, b) = space.element_bounds(e);
                for (s, w) in rule.mapped(a, b) {
                    let bs = space.eval_in_element(e, s, 2);
                    for i in 0..=p {
                        for j in 0..=p {
                            let (gi, gj) = (bs.first_index + i, bs.first_index + j);
                            mm[(gi, gj)] += w * section.a_rho * bs.values[i] * bs.values[j];
                            kk[(gi, gj)] += w * section.ei * bs.d2[i] * bs.d2[j];
                        }
                    }
                }
            }
            if outlier_removal {
                let set = ConstraintSet::for_supports(p, BoundaryKind::Free, BoundaryKind::Free, true, true);
                let c = build_extraction(&space, &set)?.to_dense();
                let ct = c.transpose();
                Ok((&ct * mm * &c, &ct * kk * &c))
            } else {
                Ok((mm, kk))
            }
        }
    }
}

fn hermite_matrices(n_elements: usize, section: &BeamSection) -> (DMat, DMat) {
    let h = section.length / n_elements as f64;
    let n = 2 * (n_elements + 1);
    #[rustfmt::skip]
    let me = DMat::from_row_slice(
        4,
        4,
        &[
            156.0, 22.0 * h, 54.0, -13.0 * h,
            22.0 * h, 4.0 * h * h, 13.0 * h, -3.0 * h * h,
            54.0, 13.0 * h, 156.0, -22.0 * h,
            -13.0 * h, -3.0 * h * h, -22.0 * h, 4.0 * h * h,
        ],
    ) * (section.a_rho * h / 420.0);
    #[rustfmt::skip]
    let ke = DMat::from_row_slice(
        4,
        4,
        &[
            12.0, 6.0 * h, -12.0, 6.0 * h,
            6.0 * h, 4.0 * h * h, -6.0 * h, 2.0 * h * h,
            -12.0, -6.0 * h, 12.0, -6.0 * h,
            6.0 * h, 2.0 * h * h, -6.0 * h, 4.0 * h * h,
        ],
    ) * (section.ei / (h * h * h));
    let mut m = DMat::zeros(n, n);
    let mut k = DMat::zeros(n, n);
    for e in 0..n_elements {
        for i in 0..4 {
            for j in 0..4 {
                m[(2 * e + i, 2 * e + j)] += me[(i, j)];
                k[(2 * e + i, 2 * e + j)] += ke[(i, j)];
            }
        }
    }
    (m, k)
}

/// Block matrices `A_L = [[Δt K, 2M], [−2I, Δt I]]` and
/// `A_R = [[−Δt K, 2M], [−2I, −Δt I]]` of the one-step propagator.
pub fn propagator_blocks(m: &DMat, k: &DMat, dt: f64) -> (DMat, DMat) {
    let n = m.nrows();
    let mut al = DMat::zeros(2 * n, 2 * n);
    let mut ar = DMat::zeros(2 * n, 2 * n);
    al.view_mut((0, 0), (n, n)).copy_from(&(k * dt));
    ar.view_mut((0, 0), (n, n)).copy_from(&(k * -dt));
    al.view_mut((0, n), (n, n)).copy_from(&(m * 2.0));
    ar.view_mut((0, n), (n, n)).copy_from(&(m * 2.0));
    for i in 0..n {
        al[(n + i, i)] = -2.0;
        ar[(n + i, i)] = -2.0;
        al[(n + i, n + i)] = dt;
        ar[(n + i, n + i)] = -dt;
    }
    (al, ar)
}

/// Determinant as mantissa and binary exponent, immune to overflow.
fn scaled_det(a: DMat) -> Result<(f64, i32)> {
    let n = a.nrows();
    let lu = LU::new(a);
    let u = lu.u();
    let mut mant = lu.p().determinant::<f64>();
    let mut exp = 0i32;
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Singular { pivot: i, size: n });
        }
        mant *= d;
        // exact power-of-two rescaling
        while mant.abs() > 2f64.powi(256) {
            mant *= 2f64.powi(-256);
            exp += 256;
        }
        while mant.abs() < 2f64.powi(-256) {
            mant *= 2f64.powi(256);
            exp -= 256;
        }
    }
    Ok((mant, exp))
}

/// `det(A_L⁻¹ A_R)` for the linear beam with mass `m` and stiffness `k`.
pub fn propagator_determinant(m: &DMat, k: &DMat, dt: f64) -> Result<f64> {
    let (al, ar) = propagator_blocks(m, k, dt);
    let (ml, el) = scaled_det(al)?;
    let (mr, er) = scaled_det(ar)?;
    Ok(mr / ml * 2f64.powi(er - el))
}

/// `det(Ã)` of the one-step propagator of the free-free linear beam.
pub fn linear_beam_det_probe(basis: ProbeBasis, n_elements: usize, dt: f64, section: &BeamSection) -> Result<f64> {
    let (m, k) = linear_beam_matrices(basis, n_elements, section)?;
    propagator_determinant(&m, &k, dt)
}

/// Mean, peak-to-peak amplitude and periodicity of a series tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub mean: f64,
    pub amplitude: f64,
    pub periodic: bool,
}

/// Statistics over the trailing `window` seconds of a uniformly sampled
/// series. With a known excitation `period` the tail is cut into whole
/// periods and the state counts as periodic when the per-period maxima and
/// minima agree within 1% of the amplitude; without a period, successive
/// local extrema are compared instead.
pub fn steady_state_stats(values: &[f64], dt: f64, window: f64, period: Option<f64>) -> Result<SteadyState> {
    if !(dt > 0.0) || !(window > 0.0) {
        return Err(Error::Series("dt and window must be positive".into()));
    }
    let n_win = (window / dt).round() as usize + 1;
    if n_win > values.len() {
        return Err(Error::Series(format!(
            "window of {window} s needs {n_win} samples, series has {}",
            values.len()
        )));
    }
    let tail = &values[values.len() - n_win..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let amplitude = max - min;
    let tol = 0.01 * amplitude.max(1e-12 * mean.abs()).max(f64::MIN_POSITIVE);
    let periodic = match period {
        Some(p) => {
            let per = (p / dt).round() as usize;
            if per == 0 || 2 * per > tail.len() {
                false
            } else {
                let chunks: Vec<(f64, f64)> = tail[tail.len() % per..]
                    .chunks(per)
                    .map(|c| {
                        (
                            c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                            c.iter().cloned().fold(f64::INFINITY, f64::min),
                        )
                    })
                    .collect();
                chunks
                    .windows(2)
                    .all(|w| (w[0].0 - w[1].0).abs() <= tol && (w[0].1 - w[1].1).abs() <= tol)
            }
        }
        None => {
            let maxima: Vec<f64> = (1..tail.len() - 1)
                .filter(|&i| tail[i] > tail[i - 1] && tail[i] >= tail[i + 1])
                .map(|i| tail[i])
                .collect();
            let minima: Vec<f64> = (1..tail.len() - 1)
                .filter(|&i| tail[i] < tail[i - 1] && tail[i] <= tail[i + 1])
                .map(|i| tail[i])
                .collect();
            amplitude <= tol
                || (maxima.len() >= 2
                    && minima.len() >= 2
                    && maxima.windows(2).all(|w| (w[0] - w[1]).abs() <= tol)
                    && minima.windows(2).all(|w| (w[0] - w[1]).abs() <= tol))
        }
    };
    Ok(SteadyState { mean, amplitude, periodic })
}

/// Steady-state displacement amplitude of `m ẍ + b ẋ + k x = f₀ sin(Ω t)`:
/// `f₀ / √(m²(Ω² − ω₀²)² + b²Ω²)` with `ω₀ = √(k/m)`.
pub fn linear_oscillator_amplitude(m: f64, b: f64, k: f64, f0: f64, omega: f64) -> f64 {
    let w0 = (k / m).sqrt();
    let dw = omega * omega - w0 * w0;
    f0 / (m * m * dw * dw + b * b * omega * omega).sqrt()
}

/// Relative L² distance between two curves with coefficients `a` and `b`
/// on the same space, `‖φ_a − φ_b‖ / ‖φ_b‖`.
pub fn relative_l2_difference(space: &SplineSpace, a: &DVec, b: &DVec) -> Result<f64> {
    let rule = gauss_rule(space.degree() + 1)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for e in 0..space.n_elements() {
        let (lo, hi) = space.element_bounds(e);
        for (s, w) in rule.mapped(lo, hi) {
            let bs = space.eval_in_element(e, s, 0);
            let mut fa = Vec3::zeros();
            let mut fb = Vec3::zeros();
            for k in 0..bs.values.len() {
                let i = 3 * (bs.first_index + k);
                fa += Vec3::new(a[i], a[i + 1], a[i + 2]) * bs.values[k];
                fb += Vec3::new(b[i], b[i + 1], b[i + 2]) * bs.values[k];
            }
            num += w * (fa - fb).norm_squared();
            den += w * fb.norm_squared();
        }
    }
    if den == 0.0 {
        return Err(Error::Series("reference curve has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// Per-component maximum drift between consecutive records.
pub fn max_step_drift(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> Vec3) -> Vec3 {
    let mut out = Vec3::zeros();
    for w in records.windows(2) {
        let d = f(&w[1]) - f(&w[0]);
        for c in 0..3 {
            out[c] = out[c].max(d[c].abs());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Discretization;
    use crate::spline::make_spline_space;

    fn section() -> BeamSection {
        let m = MaterialParams::circular(2e11, 7900.0, 0.01).unwrap();
        BeamSection { ei: m.ei, a_rho: m.a_rho, length: 10.0 }
    }

    #[test]
    fn record_total_is_sum() {
        let r = DiagnosticsRecord::new(0.1, 1.25, 3.5, Vec3::zeros(), Vec3::zeros());
        assert_eq!(r.total, 4.75);
    }

    #[test]
    fn quotient_of_quadratic_error_model() {
        let exact = DVec::from_vec(alloc::vec![1.0, -2.0, 0.5]);
        let dir = DVec::from_vec(alloc::vec![0.3, 0.1, -0.7]);
        let run = |dt: f64| &exact + &dir * (dt * dt);
        let q = precision_quotient(&[run(0.1)], &[run(0.05)], &[run(0.025)]).unwrap();
        assert!((q[0].unwrap() - 4.0).abs() < 1e-12);
        let same = [exact.clone()];
        assert_eq!(precision_quotient(&same, &same, &same).unwrap(), alloc::vec![None]);
        assert!(precision_quotient(&same, &[], &same).is_err());
    }

    #[test]
    fn det_probe_examples() {
        let sec = section();
        let c1 = ProbeBasis::Spline { p: 3, r: 1, outlier_removal: false };
        let c1o = ProbeBasis::Spline { p: 3, r: 1, outlier_removal: true };
        assert!((linear_beam_det_probe(c1, 2, 0.005, &sec).unwrap() - 1.0).abs() < 1e-12);
        assert!((linear_beam_det_probe(c1o, 16, 0.01, &sec).unwrap() - 1.0).abs() < 5e-12);
        let (m, k) = linear_beam_matrices(ProbeBasis::CubicHermite, 4, &sec).unwrap();
        let (al, ar) = propagator_blocks(&m, &k, 0.005);
        let (ml, el) = scaled_det(al).unwrap();
        let (mr, er) = scaled_det(ar).unwrap();
        let fwd = mr / ml * 2f64.powi(er - el);
        let back = ml / mr * 2f64.powi(el - er);
        assert!((fwd * back - 1.0).abs() < 1e-12);
        let a = linear_beam_det_probe(c1o, 8, 0.0025, &sec).unwrap();
        let b = linear_beam_det_probe(c1o, 8, 0.0025, &sec).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn hermite_and_spline_share_rigid_modes() {
        // rigid translation and rotation carry no strain energy
        let sec = section();
        let (_, k) = linear_beam_matrices(ProbeBasis::CubicHermite, 3, &sec).unwrap();
        let n = k.nrows() / 2;
        let mut rot = DVec::zeros(2 * n);
        let h = sec.length / 3.0;
        for i in 0..n {
            rot[2 * i] = i as f64 * h;
            rot[2 * i + 1] = 1.0;
        }
        assert!((&k * rot).amax() < 1e-9);
        let (m, _) = linear_beam_matrices(ProbeBasis::Spline { p: 3, r: 1, outlier_removal: false }, 3, &sec).unwrap();
        let total: f64 = m.iter().sum();
        assert!((total - sec.a_rho * sec.length).abs() < 1e-12);
    }

    #[test]
    fn steady_state_constant_and_sine() {
        let c = alloc::vec![2.5; 1000];
        let s = steady_state_stats(&c, 0.01, 5.0, None).unwrap();
        assert_eq!((s.mean, s.amplitude), (2.5, 0.0));
        assert!(s.periodic);
        let dt = 0.001;
        let x: Vec<f64> = (0..20_001).map(|i| 1.5 + 0.75 * (2.0 * core::f64::consts::PI * i as f64 * dt).sin()).collect();
        let s = steady_state_stats(&x, dt, 10.0, Some(1.0)).unwrap();
        assert!((s.mean - 1.5).abs() < 1e-3);
        assert!((s.amplitude - 1.5).abs() < 1e-5);
        assert!(s.periodic);
        assert!(steady_state_stats(&x, dt, 100.0, None).is_err());
    }

    /// Classical RK4 integration of `m ẍ + b ẋ + k x = f₀ sin(Ω t)`.
    fn oscillator(m: f64, b: f64, k: f64, f0: f64, w: f64, dt: f64, n: usize) -> Vec<f64> {
        let rhs = |t: f64, x: f64, v: f64| (v, (f0 * (w * t).sin() - b * v - k * x) / m);
        let (mut x, mut v) = (0.0, 0.0);
        let mut out = Vec::with_capacity(n + 1);
        out.push(x);
        for i in 0..n {
            let t = i as f64 * dt;
            let k1 = rhs(t, x, v);
            let k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1);
            let k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1);
            let k4 = rhs(t + dt, x + dt * k3.0, v + dt * k3.1);
            x += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            out.push(x);
        }
        out
    }

    #[test]
    fn oscillator_amplitude_matches_integration() {
        let (m, b, k, f0) = (2.0, 0.8, 50.0, 3.0);
        for w in [1.0, 5.0, 9.0] {
            let dt = 1e-3;
            let period = 2.0 * core::f64::consts::PI / w;
            let x = oscillator(m, b, k, f0, w, dt, 80_000);
            let s = steady_state_stats(&x, dt, 3.0 * period, Some(period)).unwrap();
            let expected = linear_oscillator_amplitude(m, b, k, f0, w);
            // peak-to-peak is twice the displacement amplitude
            assert!((s.amplitude / 2.0 - expected).abs() < 2e-3 * expected, "w={w}: {} vs {expected}", s.amplitude / 2.0);
            assert!(s.periodic);
        }
    }

    #[test]
    fn damped_settling() {
        // free damped oscillator: x = e^{-ζt} cos(ωt) + 0.3 settles to 0.3
        let dt = 0.01;
        let x: Vec<f64> = (0..6001).map(|i| {
            let t = i as f64 * dt;
            0.3 + (-0.2 * t).exp() * (3.0 * t).cos()
        }).collect();
        let early = steady_state_stats(&x[..1500], dt, 5.0, None).unwrap();
        let late = steady_state_stats(&x, dt, 5.0, None).unwrap();
        assert!((late.mean - 0.3).abs() < (early.mean - 0.3).abs() + 1e-3);
        assert!(late.amplitude < 1e-3 && early.amplitude > 0.1);
    }

    #[test]
    fn straight_rod_norms() {
        let space = make_spline_space(3, 2, 5, 2.0).unwrap();
        let dir = Vec3::new(0.6, 0.0, 0.8);
        let q = Discretization::straight_coefficients(&space, &Vec3::new(1.0, 2.0, 3.0), &dir);
        let reference = |s: f64| (Vec3::new(1.0, 2.0, 3.0) + dir * s, dir, Vec3::zeros());
        let e = error_norms(&space, &q, &reference).unwrap();
        assert!(e.l2 < 1e-14 && e.h1 < 1e-14 && e.h2 < 1e-12, "{e:?}");
        assert_eq!(relative_l2_difference(&space, &q, &q).unwrap(), 0.0);
    }
}
