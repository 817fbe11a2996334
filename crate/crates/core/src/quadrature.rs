//! Gauss–Legendre rules on `[-1, 1]`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
#[allow(unused_imports)] // shadowed when std is in the dependency graph
use num_traits::Float;

use crate::{DMat, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Points and weights mapped to the interval `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

/// `n_q`-point Gauss–Legendre rule via the Golub–Welsch eigenvalue method.
pub fn gauss_rule(n_q: usize) -> Result<QuadratureRule> {
    if !(1..=16).contains(&n_q) {
        return Err(Error::param("n_q", format!("supported orders are 1..=16, got {n_q}")));
    }
    let mut jacobi = DMat::zeros(n_q, n_q);
    for i in 1..n_q {
        let k = i as f64;
        let b = k / (4.0 * k * k - 1.0).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n_q)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize so that mirrored points and their weights agree exactly.
    for i in 0..n_q / 2 {
        let j = n_q - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n_q % 2 == 1 {
        pairs[n_q / 2].0 = 0.0;
    }
    Ok(QuadratureRule {
        points: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}
