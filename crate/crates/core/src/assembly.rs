//! Global residual and tangent assembly.
//!
//! Coefficients are stored interleaved: component `c` of control point `a`
//! lives at index `3a + c`. The solver works in reduced coordinates `q̃`
//! with `q = q_ref + (C ⊗ I₃) q̃`.

use alloc::vec::Vec;

use crate::extraction::{build_extraction, ConstraintSet, ExtractionMatrix};
use crate::forces::{flow_force_point, follower_force_2d, tip_moment_load, LoadCase};
use crate::kinematics::{
    director_energy_gradient, director_momentum, internal_force_point, kinetic_energy_density, strain_energy_density,
    strain_stress, MaterialParams, PointKinematics,
};
use crate::linalg::BandMatrix;
use crate::quadrature::{gauss_rule, QuadratureRule};
use crate::spline::{BasisEval, SplineSpace};
use crate::{DVec, Error, Mat3, Result, Vec3};

/// Basis evaluation at one quadrature point.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    pub s: f64,
    pub weight: f64,
    pub basis: BasisEval,
}

/// Spline space, constraints, reference configuration and cached
/// quadrature data of a rod model.
#[derive(Debug, Clone)]
pub struct Discretization {
    space: SplineSpace,
    extraction: ExtractionMatrix,
    q_ref: DVec,
    points: Vec<QuadPoint>,
    jac_floor: f64,
    end_basis: BasisEval,
}

/// Where the inertia correction term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionEval {
    /// At the midpoint state `(q_{n+1/2}, (q_{n+1} − q_n)/Δt)`.
    #[default]
    Midpoint,
    /// Average of the evaluations at both step ends.
    EndpointAverage,
}

/// Where the internal forces of a time step are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InternalForceEval {
    /// Trapezoidal average `½(F_int(q_n) + F_int(q_{n+1}))`.
    #[default]
    Trapezoidal,
    /// `F_int(q_{n+1/2})`; conserves angular momentum exactly when the
    /// rotary inertia is switched off.
    Midpoint,
}

/// Evaluation choices of the implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepScheme {
    pub correction: CorrectionEval,
    pub internal: InternalForceEval,
}

/// Reduced residual and tangent.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: DVec,
    pub tangent: BandMatrix,
}

/// Field values of one state at a quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct PointFields {
    pub x: Vec3,
    pub u: Vec3,
    pub v: Vec3,
}

impl Discretization {
    /// `q_ref` must satisfy the constraints (e.g. a straight initial
    /// configuration); `n_q = None` selects `p + 1` points per element.
    pub fn new(space: SplineSpace, constraints: &ConstraintSet, q_ref: DVec, n_q: Option<usize>) -> Result<Self> {
        let extraction = build_extraction(&space, constraints)?;
        if q_ref.len() != 3 * space.dim() {
            return Err(Error::param("q_ref", "length must be 3 times the basis count"));
        }
        let rule: QuadratureRule = gauss_rule(n_q.unwrap_or(space.degree() + 1))?;
        let mut points = Vec::with_capacity(space.n_elements() * rule.order());
        for e in 0..space.n_elements() {
            let (a, b) = space.element_bounds(e);
            for (s, w) in rule.mapped(a, b) {
                points.push(QuadPoint {
                    s,
                    weight: w,
                    basis: space.eval_in_element(e, s, 2),
                });
            }
        }
        let jac_floor = 1e-10 * space.element_length();
        let end_basis = space.eval(space.length(), 2)?;
        Ok(Self {
            space,
            extraction,
            q_ref,
            points,
            jac_floor,
            end_basis,
        })
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn extraction(&self) -> &ExtractionMatrix {
        &self.extraction
    }

    pub fn q_ref(&self) -> &DVec {
        &self.q_ref
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    pub fn jac_floor(&self) -> f64 {
        self.jac_floor
    }

    pub fn full_dim(&self) -> usize {
        3 * self.space.dim()
    }

    pub fn reduced_dim(&self) -> usize {
        3 * self.extraction.m_reduced()
    }

    /// Full coefficients `q_ref + C q̃`.
    pub fn expand(&self, reduced: &DVec) -> DVec {
        &self.q_ref + self.extraction.expand(reduced)
    }

    /// Full velocity `C q̃̇` (the reference offset is constant).
    pub fn expand_velocity(&self, reduced: &DVec) -> DVec {
        self.extraction.expand(reduced)
    }

    fn block_bandwidth(&self) -> usize {
        3 * self.space.degree() + 2
    }

    fn zero_tangent(&self) -> BandMatrix {
        let bw = self.block_bandwidth();
        BandMatrix::zeros(self.full_dim(), bw, bw)
    }

    /// `φ`, `φ'`, `φ''` of the coefficient vector `q` at a basis evaluation.
    pub fn fields(&self, q: &DVec, basis: &BasisEval) -> PointFields {
        let mut f = PointFields {
            x: Vec3::zeros(),
            u: Vec3::zeros(),
            v: Vec3::zeros(),
        };
        for k in 0..basis.values.len() {
            let a = 3 * (basis.first_index + k);
            let c = Vec3::new(q[a], q[a + 1], q[a + 2]);
            f.x += c * basis.values[k];
            f.u += c * basis.d1[k];
            f.v += c * basis.d2[k];
        }
        f
    }

    /// Point position `φ(s)`.
    pub fn position(&self, q: &DVec, s: f64) -> Result<Vec3> {
        Ok(self.fields(q, &self.space.eval(s, 0)?).x)
    }

    pub(crate) fn kinematics(&self, f: &PointFields, s: f64) -> Result<PointKinematics> {
        PointKinematics::new(&f.u, &f.v, self.jac_floor).map_err(|e| match e {
            Error::Degenerate { jac, .. } => Error::Degenerate { s, jac },
            other => other,
        })
    }

    /// Coefficients of the straight rod `φ(s) = origin + s·direction`.
    pub fn straight_coefficients(space: &SplineSpace, origin: &Vec3, direction: &Vec3) -> DVec {
        // Greville abscissae reproduce linear functions exactly.
        let p = space.degree();
        let knots = space.knots();
        let mut q = DVec::zeros(3 * space.dim());
        for a in 0..space.dim() {
            let g: f64 = knots[a + 1..=a + p].iter().sum::<f64>() / p as f64;
            let x = origin + direction * g;
            for c in 0..3 {
                q[3 * a + c] = x[c];
            }
        }
        q
    }
}

/// Accumulates slot-wise point contributions into a global residual and
/// tangent.
struct Scatter<'a> {
    basis: &'a BasisEval,
    weight: f64,
}

impl Scatter<'_> {
    fn shape(&self, slot: usize, k: usize) -> f64 {
        match slot {
            0 => self.basis.values[k],
            1 => self.basis.d1[k],
            _ => self.basis.d2[k],
        }
    }

    fn vector(&self, r: &mut DVec, g: &[Vec3; 3]) {
        let nb = self.basis.values.len();
        for k in 0..nb {
            let mut acc = Vec3::zeros();
            for (slot, gs) in g.iter().enumerate() {
                acc += gs * self.shape(slot, k);
            }
            let a = 3 * (self.basis.first_index + k);
            for c in 0..3 {
                r[a + c] += self.weight * acc[c];
            }
        }
    }

    fn matrix(&self, m: &mut BandMatrix, blocks: &[[Option<Mat3>; 3]; 3]) {
        let nb = self.basis.values.len();
        for ka in 0..nb {
            for kb in 0..nb {
                let mut acc = Mat3::zeros();
                let mut any = false;
                for (sa, row) in blocks.iter().enumerate() {
                    for (sb, blk) in row.iter().enumerate() {
                        if let Some(b) = blk {
                            acc += b * (self.shape(sa, ka) * self.shape(sb, kb));
                            any = true;
                        }
                    }
                }
                if !any {
                    continue;
                }
                let a = 3 * (self.basis.first_index + ka);
                let b = 3 * (self.basis.first_index + kb);
                for r in 0..3 {
                    for c in 0..3 {
                        m.add(a + r, b + c, self.weight * acc[(r, c)]);
                    }
                }
            }
        }
    }
}

fn add_block(slot: &mut Option<Mat3>, b: Mat3) {
    *slot = Some(slot.map_or(b, |a| a + b));
}

/// Full (unreduced) static residual `F_int(q) − λ F_ext(q)` and its Jacobian.
pub fn static_residual_full(
    disc: &Discretization,
    q: &DVec,
    loads: &[LoadCase],
    load_factor: f64,
    mat: &MaterialParams,
) -> Result<(DVec, BandMatrix)> {
    let mut r = DVec::zeros(disc.full_dim());
    let mut k = disc.zero_tangent();
    for qp in &disc.points {
        let f = disc.fields(q, &qp.basis);
        let kin = disc.kinematics(&f, qp.s)?;
        let ip = internal_force_point(&kin, mat);
        let mut g = [Vec3::zeros(), ip.g1, ip.g2];
        let mut blocks: [[Option<Mat3>; 3]; 3] = [[None; 3]; 3];
        blocks[1][1] = Some(ip.k[0][0]);
        blocks[1][2] = Some(ip.k[0][1]);
        blocks[2][1] = Some(ip.k[1][0]);
        blocks[2][2] = Some(ip.k[1][1]);
        for load in loads {
            match load {
                LoadCase::Gravity { g: grav } => g[0] -= grav * (mat.a_rho * load_factor),
                LoadCase::Follower2D { f0, .. } => {
                    let (force, t) = follower_force_2d(&kin, *f0 * load_factor);
                    g[0] -= force;
                    add_block(&mut blocks[0][1], -t);
                }
                _ => {}
            }
        }
        let sc = Scatter { basis: &qp.basis, weight: qp.weight };
        sc.vector(&mut r, &g);
        sc.matrix(&mut k, &blocks);
    }
    for load in loads {
        match load {
            LoadCase::PointLoad { s, force, .. } => {
                let basis = disc.space.eval(*s, 0)?;
                point_force(&mut r, &basis, &(force * -load_factor));
            }
            LoadCase::Pulsating { s, amplitude, direction, .. } => {
                let basis = disc.space.eval(*s, 0)?;
                point_force(&mut r, &basis, &(direction * (-amplitude * load_factor)));
            }
            LoadCase::TipMoment { moment, .. } => {
                let basis = &disc.end_basis;
                let f = disc.fields(q, basis);
                let kin = disc.kinematics(&f, disc.space.length())?;
                let (g, t) = tip_moment_load(&kin, &(moment * load_factor));
                let sc = Scatter { basis, weight: 1.0 };
                sc.vector(&mut r, &[Vec3::zeros(), -g, Vec3::zeros()]);
                let mut blocks: [[Option<Mat3>; 3]; 3] = [[None; 3]; 3];
                blocks[1][1] = Some(-t);
                sc.matrix(&mut k, &blocks);
            }
            _ => {}
        }
    }
    Ok((r, k))
}

fn point_force(r: &mut DVec, basis: &BasisEval, f: &Vec3) {
    Scatter { basis, weight: 1.0 }.vector(r, &[*f, Vec3::zeros(), Vec3::zeros()]);
}

/// Reduced static system at reduced coordinates `q_red`.
pub fn assemble_static(
    disc: &Discretization,
    q_red: &DVec,
    loads: &[LoadCase],
    load_factor: f64,
    mat: &MaterialParams,
) -> Result<AssembledSystem> {
    let q = disc.expand(q_red);
    let (r, k) = static_residual_full(disc, &q, loads, load_factor, mat)?;
    Ok(AssembledSystem {
        residual: disc.extraction.reduce(&r),
        tangent: disc.extraction.reduce_matrix(&k),
    })
}

/// State at the beginning of a time step.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub q_n: &'a DVec,
    pub qdot_n: &'a DVec,
    pub t_n: f64,
    pub dt: f64,
}

/// Per-step quantities at the start state that do not depend on the
/// unknown end state, cached across Newton iterations.
#[derive(Debug, Clone)]
pub struct StepCache {
    /// Internal force slots `(g1, g2)` at `q_n` per quadrature point.
    internal_n: Vec<(Vec3, Vec3)>,
    /// Director momentum at the start state per quadrature point.
    momentum_n: Vec<Vec3>,
    /// Correction term at the start state (endpoint variant only).
    correction_n: Vec<Vec3>,
    /// Position and tangent at the start state per quadrature point.
    fields_n: Vec<PointFields>,
}

impl StepCache {
    pub fn new(disc: &Discretization, input: &StepInput, mat: &MaterialParams) -> Result<Self> {
        let mut cache = Self {
            internal_n: Vec::with_capacity(disc.points.len()),
            momentum_n: Vec::with_capacity(disc.points.len()),
            correction_n: Vec::with_capacity(disc.points.len()),
            fields_n: Vec::with_capacity(disc.points.len()),
        };
        for qp in &disc.points {
            let f = disc.fields(input.q_n, &qp.basis);
            let kin = disc.kinematics(&f, qp.s)?;
            let ip = internal_force_point(&kin, mat);
            cache.internal_n.push((ip.g1, ip.g2));
            let w = disc.fields(input.qdot_n, &qp.basis).u;
            cache.momentum_n.push(director_momentum(&kin, &w, mat).0);
            cache.correction_n.push(director_energy_gradient(&kin, &w, mat).0);
            cache.fields_n.push(f);
        }
        Ok(cache)
    }
}

/// Full (unreduced) residual of one implicit step for the end state
/// `q_next` and its Jacobian with respect to `q_next`.
pub fn dynamic_residual_full(
    disc: &Discretization,
    input: &StepInput,
    cache: &StepCache,
    q_next: &DVec,
    loads: &[LoadCase],
    mat: &MaterialParams,
    scheme: StepScheme,
) -> Result<(DVec, BandMatrix)> {
    let dt = input.dt;
    let t_mid = input.t_n + 0.5 * dt;
    let qdot_next = (q_next - input.q_n) * (2.0 / dt) - input.qdot_n;
    let q_mid = (q_next + input.q_n) * 0.5;
    let mut r = DVec::zeros(disc.full_dim());
    let mut k = disc.zero_tangent();
    let eye = Mat3::identity();
    for (i, qp) in disc.points.iter().enumerate() {
        let f1 = disc.fields(q_next, &qp.basis);
        let fm = disc.fields(&q_mid, &qp.basis);
        let vel0 = disc.fields(input.qdot_n, &qp.basis);
        let vel1 = disc.fields(&qdot_next, &qp.basis);
        let kin1 = disc.kinematics(&f1, qp.s)?;
        let mut g = [Vec3::zeros(); 3];
        let mut blocks: [[Option<Mat3>; 3]; 3] = [[None; 3]; 3];

        // translational inertia
        g[0] += (vel1.x - vel0.x) * (mat.a_rho / dt);
        blocks[0][0] = Some(eye * (2.0 * mat.a_rho / (dt * dt)));

        // director inertia: momentum difference plus correction term
        if mat.rotary() != 0.0 {
            let (p1, dp_du, dp_dw) = director_momentum(&kin1, &vel1.u, mat);
            g[1] += (p1 - cache.momentum_n[i]) / dt;
            let mut k11 = (dp_du + dp_dw * (2.0 / dt)) / dt;
            match scheme.correction {
                CorrectionEval::Midpoint => {
                    let kin_m = disc.kinematics(&fm, qp.s)?;
                    let w_mid = (f1.u - cache.fields_n[i].u) / dt;
                    let (c, dc_du, dc_dw) = director_energy_gradient(&kin_m, &w_mid, mat);
                    g[1] += c;
                    k11 += dc_du * 0.5 + dc_dw / dt;
                }
                CorrectionEval::EndpointAverage => {
                    let (c, dc_du, dc_dw) = director_energy_gradient(&kin1, &vel1.u, mat);
                    g[1] += (c + cache.correction_n[i]) * 0.5;
                    k11 += (dc_du + dc_dw * (2.0 / dt)) * 0.5;
                }
            }
            blocks[1][1] = Some(k11);
        }

        // internal forces
        let ip = match scheme.internal {
            InternalForceEval::Trapezoidal => {
                let ip = internal_force_point(&kin1, mat);
                let (g1n, g2n) = cache.internal_n[i];
                g[1] += (ip.g1 + g1n) * 0.5;
                g[2] += (ip.g2 + g2n) * 0.5;
                ip
            }
            InternalForceEval::Midpoint => {
                let ip = internal_force_point(&disc.kinematics(&fm, qp.s)?, mat);
                g[1] += ip.g1;
                g[2] += ip.g2;
                ip
            }
        };
        add_block(&mut blocks[1][1], ip.k[0][0] * 0.5);
        blocks[1][2] = Some(ip.k[0][1] * 0.5);
        blocks[2][1] = Some(ip.k[1][0] * 0.5);
        blocks[2][2] = Some(ip.k[1][1] * 0.5);

        // distributed loads at the midpoint
        for load in loads {
            match load {
                LoadCase::Gravity { g: grav } => g[0] -= grav * mat.a_rho,
                LoadCase::Follower2D { f0, time } => {
                    let kin_m = disc.kinematics(&fm, qp.s)?;
                    let (force, t) = follower_force_2d(&kin_m, f0 * time.value(t_mid));
                    g[0] -= force;
                    add_block(&mut blocks[0][1], -t * 0.5);
                }
                LoadCase::Flow(flow) => {
                    let kin_m = disc.kinematics(&fm, qp.s)?;
                    let vel_mid = (f1.x - cache.fields_n[i].x) / dt;
                    let acc = (vel1.x - vel0.x) / dt;
                    let ff = flow_force_point(&kin_m, &fm.x, &vel_mid, &acc, &flow.profile, t_mid, &flow.coefficients());
                    g[0] -= ff.force;
                    add_block(
                        &mut blocks[0][0],
                        -(ff.d_position * 0.5 + ff.d_velocity / dt + ff.d_accel * (2.0 / (dt * dt))),
                    );
                    add_block(&mut blocks[0][1], -ff.d_tangent * 0.5);
                }
                _ => {}
            }
        }
        let sc = Scatter { basis: &qp.basis, weight: qp.weight };
        sc.vector(&mut r, &g);
        sc.matrix(&mut k, &blocks);
    }
    for load in loads {
        match load {
            LoadCase::PointLoad { s, force, time } => {
                let basis = disc.space.eval(*s, 0)?;
                point_force(&mut r, &basis, &(force * -time.value(t_mid)));
            }
            LoadCase::Pulsating { s, amplitude, frequency_hz, convention, direction } => {
                let basis = disc.space.eval(*s, 0)?;
                let f = crate::forces::pulsating_force_hz(t_mid, *amplitude, *frequency_hz, *convention, direction);
                point_force(&mut r, &basis, &-f);
            }
            LoadCase::TipMoment { moment, time } => {
                let basis = &disc.end_basis;
                let f = disc.fields(&q_mid, basis);
                let kin = disc.kinematics(&f, disc.space.length())?;
                let (g, t) = tip_moment_load(&kin, &(moment * time.value(t_mid)));
                let sc = Scatter { basis, weight: 1.0 };
                sc.vector(&mut r, &[Vec3::zeros(), -g, Vec3::zeros()]);
                let mut blocks: [[Option<Mat3>; 3]; 3] = [[None; 3]; 3];
                blocks[1][1] = Some(-t * 0.5);
                sc.matrix(&mut k, &blocks);
            }
            _ => {}
        }
    }
    Ok((r, k))
}

/// Reduced residual and tangent of one implicit step at the reduced end
/// state `q_next_red`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_dynamic_step(
    disc: &Discretization,
    input: &StepInput,
    cache: &StepCache,
    q_next_red: &DVec,
    loads: &[LoadCase],
    mat: &MaterialParams,
    scheme: StepScheme,
) -> Result<AssembledSystem> {
    let q_next = disc.expand(q_next_red);
    let (r, k) = dynamic_residual_full(disc, input, cache, &q_next, loads, mat, scheme)?;
    Ok(AssembledSystem {
        residual: disc.extraction.reduce(&r),
        tangent: disc.extraction.reduce_matrix(&k),
    })
}

/// Energies of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub kinetic: f64,
    pub potential: f64,
}

/// Kinetic and strain energy of the full state `(q, q̇)`.
pub fn energies(disc: &Discretization, q: &DVec, qdot: &DVec, mat: &MaterialParams) -> Result<Energies> {
    let mut e = Energies { kinetic: 0.0, potential: 0.0 };
    for qp in &disc.points {
        let f = disc.fields(q, &qp.basis);
        let v = disc.fields(qdot, &qp.basis);
        let kin = disc.kinematics(&f, qp.s)?;
        e.potential += qp.weight * strain_energy_density(&strain_stress(&kin, mat), mat);
        e.kinetic += qp.weight * kinetic_energy_density(&kin, &v.x, &v.u, mat);
    }
    Ok(e)
}

/// Linear momentum `∫A_ρ φ̇ ds` and angular momentum about the origin
/// `∫(A_ρ φ × φ̇ + α I_ρ d × ḋ) ds`.
pub fn momenta(disc: &Discretization, q: &DVec, qdot: &DVec, mat: &MaterialParams) -> Result<(Vec3, Vec3)> {
    let mut l = Vec3::zeros();
    let mut j = Vec3::zeros();
    for qp in &disc.points {
        let f = disc.fields(q, &qp.basis);
        let v = disc.fields(qdot, &qp.basis);
        let kin = disc.kinematics(&f, qp.s)?;
        l += v.x * (mat.a_rho * qp.weight);
        j += (f.x.cross(&v.x) * mat.a_rho + kin.d.cross(&kin.director_rate(&v.u)) * mat.rotary()) * qp.weight;
    }
    Ok((l, j))
}

/// Consistent mass matrix at configuration `q` (full coordinates).
pub fn mass_matrix(disc: &Discretization, q: &DVec, mat: &MaterialParams) -> Result<BandMatrix> {
    let mut m = disc.zero_tangent();
    for qp in &disc.points {
        let f = disc.fields(q, &qp.basis);
        let kin = disc.kinematics(&f, qp.s)?;
        let mut blocks: [[Option<Mat3>; 3]; 3] = [[None; 3]; 3];
        blocks[0][0] = Some(Mat3::identity() * mat.a_rho);
        blocks[1][1] = Some(kin.p_d * (mat.rotary() / (kin.jac * kin.jac)));
        Scatter { basis: &qp.basis, weight: qp.weight }.matrix(&mut m, &blocks);
    }
    Ok(m)
}
