//! Uniform open B-spline spaces on `[0, L]` and basis evaluation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Degree, continuity and knot structure of a scalar spline space.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    degree: usize,
    continuity: usize,
    n_elements: usize,
    length: f64,
    knots: Vec<f64>,
}

/// Nonzero basis functions and their first two derivatives at one point.
///
/// Entry `k` belongs to the global basis function `first_index + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub first_index: usize,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Builds the space of degree `p` splines with `C^r` continuity over
/// `n_elements` uniform elements of `[0, length]`.
pub fn make_spline_space(p: usize, r: usize, n_elements: usize, length: f64) -> Result<SplineSpace> {
    SplineSpace::new(p, r, n_elements, length)
}

impl SplineSpace {
    pub fn new(p: usize, r: usize, n_elements: usize, length: f64) -> Result<Self> {
        if p < 2 {
            return Err(Error::param("degree", format!("must be at least 2, got {p}")));
        }
        if r < 1 || r >= p {
            return Err(Error::param(
                "continuity",
                format!("must satisfy 1 <= r <= p-1 = {}, got {r}", p - 1),
            ));
        }
        if n_elements == 0 {
            return Err(Error::param("n_elements", "must be positive"));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::param("length", format!("must be positive and finite, got {length}")));
        }
        let mult = p - r;
        let mut knots = Vec::with_capacity(2 * (p + 1) + (n_elements - 1) * mult);
        knots.extend(core::iter::repeat_n(0.0, p + 1));
        for e in 1..n_elements {
            let x = length * e as f64 / n_elements as f64;
            knots.extend(core::iter::repeat_n(x, mult));
        }
        knots.extend(core::iter::repeat_n(length, p + 1));
        Ok(Self {
            degree: p,
            continuity: r,
            n_elements,
            length,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn continuity(&self) -> usize {
        self.continuity
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions, `nₑ(p−r) + r + 1`.
    pub fn dim(&self) -> usize {
        self.n_elements * (self.degree - self.continuity) + self.continuity + 1
    }

    pub fn element_length(&self) -> f64 {
        self.length / self.n_elements as f64
    }

    /// Parametric bounds of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let n = self.n_elements as f64;
        (
            self.length * e as f64 / n,
            self.length * (e + 1) as f64 / n,
        )
    }

    /// Index of the first basis function supported on element `e`.
    pub fn element_first_index(&self, e: usize) -> usize {
        e * (self.degree - self.continuity)
    }

    /// Element containing `s`; the right end belongs to the last element.
    pub fn element_of(&self, s: f64) -> Result<usize> {
        if !(s >= 0.0 && s <= self.length) {
            return Err(Error::Domain { s, length: self.length });
        }
        let h = self.element_length();
        let mut e = ((s / h) as usize).min(self.n_elements - 1);
        // guard against round-off at element interfaces
        while e > 0 && s < self.element_bounds(e).0 {
            e -= 1;
        }
        while e + 1 < self.n_elements && s >= self.element_bounds(e + 1).0 {
            e += 1;
        }
        Ok(e)
    }

    /// Evaluates the `p+1` nonzero basis functions at `s`.
    pub fn eval(&self, s: f64, max_deriv: usize) -> Result<BasisEval> {
        let e = self.element_of(s)?;
        Ok(self.eval_in_element(e, s, max_deriv))
    }

    /// Evaluation with a known element; `s` may lie on either element edge.
    pub fn eval_in_element(&self, e: usize, s: f64, max_deriv: usize) -> BasisEval {
        let p = self.degree;
        let span = p + e * (p - self.continuity);
        let ders = ders_basis_funs(span, s, p, max_deriv.min(2), &self.knots);
        let mut out = BasisEval {
            first_index: span - p,
            values: ders[0].clone(),
            d1: vec![0.0; p + 1],
            d2: vec![0.0; p + 1],
        };
        if max_deriv >= 1 {
            out.d1.copy_from_slice(&ders[1]);
        }
        if max_deriv >= 2 {
            out.d2.copy_from_slice(&ders[2]);
        }
        out
    }

    /// All derivatives up to `order` (which may exceed 2) of the nonzero
    /// basis functions at `s`; row `k` holds the `k`-th derivatives.
    pub fn eval_derivatives(&self, s: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        let e = self.element_of(s)?;
        let p = self.degree;
        let span = p + e * (p - self.continuity);
        Ok((span - p, ders_basis_funs(span, s, p, order, &self.knots)))
    }
}

/// Free-function form of [`SplineSpace::eval`].
pub fn eval_basis(space: &SplineSpace, s: f64, max_deriv: usize) -> Result<BasisEval> {
    if max_deriv > 2 {
        return Err(Error::param("max_deriv", "at most 2"));
    }
    space.eval(s, max_deriv)
}

/// Cox–de Boor recurrence with derivatives (nonzero functions of span `i`).
/// Derivatives beyond the degree are zero.
fn ders_basis_funs(i: usize, u: f64, p: usize, n: usize, knots: &[f64]) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[i + 1 - j];
        right[j] = knots[i + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nd = n.min(p);
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0].fill(0.0);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            core::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd {
        for v in ders[k].iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}
