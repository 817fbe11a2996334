//! Small tensor helpers and a banded LU solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::{DVec, Error, Mat3, Result, Vec3};

/// Skew-symmetric matrix `[a]×` with `[a]× b = a × b`.
#[inline]
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Dyadic product `a ⊗ b`.
#[inline]
pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    a * b.transpose()
}

/// Symmetric product of two vectors, `½(a⊗b + b⊗a)`.
#[inline]
pub fn sym_outer(a: &Vec3, b: &Vec3) -> Mat3 {
    (outer(a, b) + outer(b, a)) * 0.5
}

/// Symmetric product of two tensors, `½(A·B + Bᵀ·Aᵀ)`.
#[inline]
pub fn sym_product(a: &Mat3, b: &Mat3) -> Mat3 {
    (a * b + b.transpose() * a.transpose()) * 0.5
}

/// `|x| x`, the quadratic drag law.
#[inline]
pub fn abs_times(x: &Vec3) -> Vec3 {
    x * x.norm()
}

/// Jacobian of `|x| x`, with the analytic limit `0` at the origin.
#[inline]
pub fn abs_times_jacobian(x: &Vec3) -> Mat3 {
    let n = x.norm();
    if n == 0.0 {
        Mat3::zeros()
    } else {
        Mat3::identity() * n + outer(x, x) / n
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored contiguously and padded with `kl` extra super-diagonals so
/// that the factorization with partial pivoting fits in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// Panics if `(i, j)` lies outside the band, which indicates a sparsity
    /// bookkeeping bug in the caller.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band (kl={}, ku={})",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j));
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn mul_vec(&self, x: &DVec) -> DVec {
        let mut y = DVec::zeros(self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[self.idx(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn to_dense(&self) -> crate::DMat {
        crate::DMat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// LU factorization with partial (row) pivoting.
    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { pivot: k, size: n });
            }
            perm[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandLu { a: self, perm })
    }
}

/// Factorized band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &DVec) -> DVec {
        let n = self.a.n;
        let kl = self.a.kl;
        let reach = self.a.ku + self.a.kl;
        let mut x = b.clone();
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                x.swap_rows(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.a.data[self.a.idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                acc -= self.a.data[self.a.idx(k, j)] * x[j];
            }
            x[k] = acc / self.a.data[self.a.idx(k, k)];
        }
        x
    }
}
