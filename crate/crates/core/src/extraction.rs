//! Boundary constraints and the extraction operator.
//!
//! All constraints are linear conditions on one scalar coefficient field and
//! are applied identically to the three components. The extraction operator
//! `C` spans their null space, so `q = q_ref + (C ⊗ I₃) q̃` satisfies them for
//! any reduced vector `q̃` when `q_ref` does.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed when std is in the dependency graph
use num_traits::Float;

use crate::linalg::BandMatrix;
use crate::spline::SplineSpace;
use crate::{DMat, DVec, Error, Result};

/// End of the parametric interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    Start,
    End,
}

/// Support type of a rod end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// No essential condition.
    Free,
    /// Position fixed.
    Pinned,
    /// Position and tangent fixed.
    Clamped,
}

/// Why a constraint row exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintRole {
    Essential,
    Outlier,
}

/// `d^order f / ds^order = 0` at a boundary (homogeneous in the variation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub boundary: Boundary,
    pub order: usize,
    pub role: ConstraintRole,
}

/// Ordered collection of boundary constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl BoundaryKind {
    /// Derivative orders fixed by the support itself.
    pub fn essential_orders(self) -> &'static [usize] {
        match self {
            BoundaryKind::Free => &[],
            BoundaryKind::Pinned => &[0],
            BoundaryKind::Clamped => &[0, 1],
        }
    }

    /// Derivative orders set to zero to remove outlier modes from a degree
    /// `p` space.
    ///
    /// The natural boundary conditions of the fourth-order problem pick the
    /// pattern: a clamped end has vanishing orders {0, 1}, a pinned end
    /// {0, 2} and a free end {2, 3}. The pattern repeats with period 4 and
    /// every order in `1..p` not already essential is constrained.
    pub fn outlier_orders(self, p: usize) -> Vec<usize> {
        let base: &[usize] = match self {
            BoundaryKind::Free => &[2, 3],
            BoundaryKind::Pinned => &[0, 2],
            BoundaryKind::Clamped => &[0, 1],
        };
        (1..p)
            .filter(|k| base.contains(&(k % 4)) && !self.essential_orders().contains(k))
            .collect()
    }
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, boundary: Boundary, order: usize, role: ConstraintRole) {
        let c = Constraint { boundary, order, role };
        if !self.constraints.contains(&c) {
            self.constraints.push(c);
        }
    }

    /// Constraints for the given end supports, optionally with outlier
    /// removal at each end.
    pub fn for_supports(
        p: usize,
        start: BoundaryKind,
        end: BoundaryKind,
        outlier_start: bool,
        outlier_end: bool,
    ) -> Self {
        let mut set = Self::new();
        for (b, kind, outliers) in [(Boundary::Start, start, outlier_start), (Boundary::End, end, outlier_end)] {
            for &k in kind.essential_orders() {
                set.push(b, k, ConstraintRole::Essential);
            }
            if outliers {
                for k in kind.outlier_orders(p) {
                    set.push(b, k, ConstraintRole::Outlier);
                }
            }
        }
        set
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Dense constraint matrix `A` (one row per constraint) on the scalar space.
    pub fn matrix(&self, space: &SplineSpace) -> Result<DMat> {
        let m = space.dim();
        let mut a = DMat::zeros(self.constraints.len(), m);
        for (row, c) in self.constraints.iter().enumerate() {
            if c.order > space.degree() {
                return Err(Error::Constraint(format!(
                    "derivative order {} exceeds degree {}",
                    c.order,
                    space.degree()
                )));
            }
            let s = match c.boundary {
                Boundary::Start => 0.0,
                Boundary::End => space.length(),
            };
            let (first, ders) = space.eval_derivatives(s, c.order)?;
            // rows are scaled by h^order so all constraints are O(1)
            let scale = space.element_length().powi(c.order as i32);
            for (k, v) in ders[c.order].iter().enumerate() {
                a[(row, first + k)] = v * scale;
            }
        }
        Ok(a)
    }
}

/// Sparse extraction operator `C` of shape `m_full × m_reduced`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionMatrix {
    m_full: usize,
    columns: Vec<Vec<(usize, f64)>>,
    constraints: ConstraintSet,
    /// Scalar bandwidth of `Cᵀ K C` for a scalar stiffness with bandwidth `p`.
    reduced_bandwidth: usize,
}

/// Null-space basis of the constraint rows with identity in the interior.
pub fn build_extraction(space: &SplineSpace, constraints: &ConstraintSet) -> Result<ExtractionMatrix> {
    let m = space.dim();
    let a = constraints.matrix(space)?;
    let k = a.nrows();
    if k >= m {
        return Err(Error::Constraint(format!(
            "{k} constraints leave no free coefficients out of {m}"
        )));
    }
    // Elimination with pivots chosen from the boundary inward, so the
    // dependent coefficients are the outermost ones.
    let mut order = Vec::with_capacity(m);
    let (mut lo, mut hi) = (0usize, m - 1);
    while lo <= hi {
        order.push(lo);
        if hi != lo {
            order.push(hi);
        }
        lo += 1;
        if hi == 0 {
            break;
        }
        hi -= 1;
    }
    let mut r = a.clone();
    let mut pivot_col = vec![usize::MAX; k];
    let mut row = 0;
    for &col in &order {
        if row == k {
            break;
        }
        let mut best = row;
        let mut best_val = 0.0;
        for i in row..k {
            let v = r[(i, col)].abs();
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        if best_val <= 1e-10 {
            continue;
        }
        r.swap_rows(row, best);
        let piv = r[(row, col)];
        for j in 0..m {
            r[(row, j)] /= piv;
        }
        for i in 0..k {
            if i != row {
                let f = r[(i, col)];
                if f != 0.0 {
                    for j in 0..m {
                        let v = r[(row, j)];
                        r[(i, j)] -= f * v;
                    }
                }
            }
        }
        pivot_col[row] = col;
        row += 1;
    }
    if row < k {
        return Err(Error::Constraint(format!(
            "constraint rows are linearly dependent (rank {row} of {k})"
        )));
    }
    let mut is_pivot = vec![false; m];
    for &c in &pivot_col {
        is_pivot[c] = true;
    }
    let mut columns = Vec::with_capacity(m - k);
    for f in 0..m {
        if is_pivot[f] {
            continue;
        }
        let mut col = vec![(f, 1.0)];
        for i in 0..k {
            let v = -r[(i, f)];
            if v.abs() > 1e-15 {
                col.push((pivot_col[i], v));
            }
        }
        col.sort_by_key(|e| e.0);
        columns.push(col);
    }
    let p = space.degree();
    let n = columns.len();
    let ranges: Vec<(usize, usize)> = columns
        .iter()
        .map(|c| (c.first().unwrap().0, c.last().unwrap().0))
        .collect();
    let mut bw = 0;
    for i in 0..n {
        for j in i + 1..n {
            // supports interact when their index ranges come within p
            if ranges[j].0 <= ranges[i].1 + p && ranges[i].0 <= ranges[j].1 + p {
                bw = bw.max(j - i);
            }
        }
    }
    Ok(ExtractionMatrix {
        m_full: m,
        columns,
        constraints: constraints.clone(),
        reduced_bandwidth: bw,
    })
}

impl ExtractionMatrix {
    /// Identity operator on a space of dimension `m`.
    pub fn identity(m: usize, p: usize) -> Self {
        Self {
            m_full: m,
            columns: (0..m).map(|i| vec![(i, 1.0)]).collect(),
            constraints: ConstraintSet::new(),
            reduced_bandwidth: p.min(m.saturating_sub(1)),
        }
    }

    pub fn m_full(&self) -> usize {
        self.m_full
    }

    pub fn m_reduced(&self) -> usize {
        self.columns.len()
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    /// Nonzeros `(row, value)` of column `j`.
    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn reduced_bandwidth(&self) -> usize {
        self.reduced_bandwidth
    }

    pub fn to_dense(&self) -> DMat {
        let mut c = DMat::zeros(self.m_full, self.columns.len());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                c[(i, j)] = v;
            }
        }
        c
    }

    /// `(C ⊗ I₃) q̃` for interleaved 3-component coefficients.
    pub fn expand(&self, reduced: &DVec) -> DVec {
        let mut q = DVec::zeros(3 * self.m_full);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                for c in 0..3 {
                    q[3 * i + c] += v * reduced[3 * j + c];
                }
            }
        }
        q
    }

    /// `(C ⊗ I₃)ᵀ r`.
    pub fn reduce(&self, full: &DVec) -> DVec {
        let mut r = DVec::zeros(3 * self.columns.len());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                for c in 0..3 {
                    r[3 * j + c] += v * full[3 * i + c];
                }
            }
        }
        r
    }

    /// `(C ⊗ I₃)ᵀ K (C ⊗ I₃)` for a block-banded `K` on interleaved dofs.
    pub fn reduce_matrix(&self, k: &BandMatrix) -> BandMatrix {
        let n = self.columns.len();
        let bw = 3 * self.reduced_bandwidth + 2;
        let mut out = BandMatrix::zeros(3 * n, bw, bw);
        for j in 0..n {
            let lo = j.saturating_sub(self.reduced_bandwidth);
            let hi = (j + self.reduced_bandwidth).min(n - 1);
            for i in lo..=hi {
                let mut block = [[0.0; 3]; 3];
                let mut touched = false;
                for &(a, ca) in &self.columns[i] {
                    for &(b, cb) in &self.columns[j] {
                        let w = ca * cb;
                        for (r, brow) in block.iter_mut().enumerate() {
                            for (c, v) in brow.iter_mut().enumerate() {
                                *v += w * k.get(3 * a + r, 3 * b + c);
                            }
                        }
                        touched = true;
                    }
                }
                if touched {
                    for (r, brow) in block.iter().enumerate() {
                        for (c, v) in brow.iter().enumerate() {
                            out.add(3 * i + r, 3 * j + c, *v);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::make_spline_space;

    fn column_function_derivative(space: &SplineSpace, ex: &ExtractionMatrix, j: usize, s: f64, order: usize) -> f64 {
        let (first, ders) = space.eval_derivatives(s, order).unwrap();
        ex.column(j)
            .iter()
            .filter(|(i, _)| *i >= first && *i <= first + space.degree())
            .map(|(i, v)| v * ders[order][i - first])
            .sum()
    }

    #[test]
    fn empty_set_gives_identity() {
        let space = make_spline_space(3, 1, 6, 2.0).unwrap();
        let ex = build_extraction(&space, &ConstraintSet::new()).unwrap();
        assert_eq!(ex.to_dense(), DMat::identity(space.dim(), space.dim()));
    }

    #[test]
    fn clamped_columns_vanish_at_start() {
        let space = make_spline_space(3, 1, 5, 1.0).unwrap();
        let set = ConstraintSet::for_supports(3, BoundaryKind::Clamped, BoundaryKind::Free, false, false);
        let ex = build_extraction(&space, &set).unwrap();
        assert_eq!(ex.m_reduced(), space.dim() - 2);
        for j in 0..ex.m_reduced() {
            assert!(column_function_derivative(&space, &ex, j, 0.0, 0).abs() < 1e-14);
            assert!(column_function_derivative(&space, &ex, j, 0.0, 1).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_with_outlier_constraints() {
        let space = make_spline_space(3, 1, 8, 1.0).unwrap();
        let set = ConstraintSet::for_supports(3, BoundaryKind::Clamped, BoundaryKind::Free, true, true);
        assert_eq!(
            set.constraints.iter().filter(|c| c.role == ConstraintRole::Outlier).count(),
            1
        );
        let ex = build_extraction(&space, &set).unwrap();
        let a = set.matrix(&space).unwrap();
        let c = ex.to_dense();
        assert!((&a * &c).amax() < 1e-12);
        // identity on interior rows
        let m = space.dim();
        for i in 4..m - 4 {
            for j in 0..ex.m_reduced() {
                let v = c[(i, j)];
                assert!(v == 0.0 || v == 1.0);
            }
            assert_eq!(c.row(i).iter().filter(|v| **v == 1.0).count(), 1);
        }
        assert_eq!(c.clone().svd(false, false).rank(1e-10), ex.m_reduced());
    }

    #[test]
    fn outlier_recipe_tables() {
        assert_eq!(BoundaryKind::Free.outlier_orders(3), vec![2]);
        assert_eq!(BoundaryKind::Clamped.outlier_orders(3), Vec::<usize>::new());
        assert_eq!(BoundaryKind::Pinned.outlier_orders(3), vec![2]);
        assert_eq!(BoundaryKind::Free.outlier_orders(5), vec![2, 3]);
        assert_eq!(BoundaryKind::Clamped.outlier_orders(5), vec![4]);
        assert_eq!(BoundaryKind::Pinned.outlier_orders(5), vec![2, 4]);
        assert_eq!(BoundaryKind::Free.outlier_orders(2), Vec::<usize>::new());
    }

    #[test]
    fn over_constrained_is_an_error() {
        let space = make_spline_space(2, 1, 1, 1.0).unwrap();
        let mut set = ConstraintSet::new();
        for (b, k) in [(Boundary::Start, 0), (Boundary::Start, 1), (Boundary::End, 0), (Boundary::End, 1)] {
            set.push(b, k, ConstraintRole::Essential);
        }
        assert!(matches!(build_extraction(&space, &set), Err(Error::Constraint(_))));
    }

    #[test]
    fn dependent_rows_are_an_error() {
        // a single element with p = 2 has no room for order 3
        let space = make_spline_space(2, 1, 1, 1.0).unwrap();
        let mut set = ConstraintSet::new();
        set.push(Boundary::Start, 3, ConstraintRole::Outlier);
        assert!(build_extraction(&space, &set).is_err());
    }

    #[test]
    fn constraint_residual_sweep() {
        for p in 2..=5 {
            for r in 1..p {
                for ne in [2, 5, 9] {
                    let space = make_spline_space(p, r, ne, 3.0).unwrap();
                    for (s0, s1) in [
                        (BoundaryKind::Clamped, BoundaryKind::Free),
                        (BoundaryKind::Free, BoundaryKind::Free),
                        (BoundaryKind::Pinned, BoundaryKind::Pinned),
                    ] {
                        let set = ConstraintSet::for_supports(p, s0, s1, true, true);
                        let ex = build_extraction(&space, &set).unwrap();
                        let c = ex.to_dense();
                        assert!((set.matrix(&space).unwrap() * &c).amax() < 1e-12);
                        assert_eq!(c.svd(false, false).rank(1e-10), ex.m_reduced());
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_products_match_dense() {
        let space = make_spline_space(3, 1, 6, 1.0).unwrap();
        let set = ConstraintSet::for_supports(3, BoundaryKind::Clamped, BoundaryKind::Free, true, true);
        let ex = build_extraction(&space, &set).unwrap();
        let m = space.dim();
        let mut k = BandMatrix::zeros(3 * m, 3 * 3 + 2, 3 * 3 + 2);
        for a in 0..m {
            for b in a.saturating_sub(3)..=(a + 3).min(m - 1) {
                for r in 0..3 {
                    for c in 0..3 {
                        k.add(3 * a + r, 3 * b + c, ((a * 7 + b * 3 + r * 5 + c) % 11) as f64 - 5.0);
                    }
                }
            }
        }
        let c3 = ex.to_dense().kronecker(&DMat::identity(3, 3));
        let dense = c3.transpose() * k.to_dense() * &c3;
        assert!((ex.reduce_matrix(&k).to_dense() - dense).amax() < 1e-12);
        let v = DVec::from_fn(3 * ex.m_reduced(), |i, _| i as f64 * 0.1);
        assert!((ex.expand(&v) - &c3 * &v).amax() < 1e-14);
        let w = DVec::from_fn(3 * m, |i, _| (i as f64).cos());
        assert!((ex.reduce(&w) - c3.transpose() * w).amax() < 1e-13);
    }
}
