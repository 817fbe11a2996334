#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rodsim_core::assembly::Discretization;
use rodsim_core::extraction::{BoundaryKind, ConstraintSet};
use rodsim_core::linalg::BandMatrix;
use rodsim_core::spline::SplineSpace;
use rodsim_core::{DMat, DVec, Vec3};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Straight rod along `dir` starting at the origin.
pub fn straight_rod(
    p: usize,
    r: usize,
    ne: usize,
    length: f64,
    dir: Vec3,
    start: BoundaryKind,
    end: BoundaryKind,
    outliers: bool,
) -> Discretization {
    let space = SplineSpace::new(p, r, ne, length).unwrap();
    let q_ref = Discretization::straight_coefficients(&space, &Vec3::zeros(), &dir);
    let set = ConstraintSet::for_supports(p, start, end, outliers, outliers);
    Discretization::new(space, &set, q_ref, None).unwrap()
}

pub fn random_vec(rng: &mut StdRng, n: usize, scale: f64) -> DVec {
    DVec::from_fn(n, |_, _| scale * rng.gen_range(-1.0..1.0))
}

/// Central-difference Jacobian of `f` at `x` with step `h`.
pub fn fd_jacobian(x: &DVec, h: f64, mut f: impl FnMut(&DVec) -> DVec) -> DMat {
    let n = x.len();
    let m = f(x).len();
    let mut j = DMat::zeros(m, n);
    for c in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        let d = (f(&xp) - f(&xm)) / (2.0 * h);
        j.set_column(c, &d);
    }
    j
}

/// Max-norm deviation of `k` from `fd` relative to the max-norm of `fd`.
pub fn relative_deviation(k: &BandMatrix, fd: &DMat) -> f64 {
    let dense = k.to_dense();
    let scale = fd.amax().max(1e-300);
    (dense - fd).amax() / scale
}
