//! Compressed-row sparse operators on mesh-graph patterns and a banded
//! direct solver for them.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Compressed-row sparsity pattern with sorted column indices per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from per-row column lists. Columns are sorted and
    /// deduplicated.
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols }
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Global storage index of entry `(i, j)`, if present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|p| start + p)
    }

    /// Position of column `j` inside row `i`.
    pub fn position_in_row(&self, i: usize, j: usize) -> Option<usize> {
        self.row(i).binary_search(&j).ok()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.position_in_row(i, j).is_some()
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.nrows() {
            for &j in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Pattern of the product of this (symmetric) pattern with itself.
    pub fn squared(&self) -> Self {
        let n = self.nrows();
        let mut mark = vec![usize::MAX; n];
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = Vec::new();
            for &j in self.row(i) {
                for &k in self.row(j) {
                    if mark[k] != i {
                        mark[k] = i;
                        r.push(k);
                    }
                }
            }
            rows.push(r);
        }
        Self::from_rows(rows)
    }
}

/// Square sparse matrix whose stored entries follow a shared [`Pattern`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.nrows()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_pattern(&self, other: &Pattern) -> bool {
        std::ptr::eq(self.pattern.as_ref(), other) || *self.pattern == *other
    }

    /// Entry `(i, j)`; zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// Panics if `(i, j)` is not part of the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] = v;
    }

    /// Row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.pattern.row_range(i);
        self.pattern.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn row_values_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.pattern.row_range(i);
        &mut self.values[r]
    }

    pub fn row_values(&self, i: usize) -> &[f64] {
        let r = self.pattern.row_range(i);
        &self.values[r]
    }

    /// Replaces row `i` by the identity row.
    pub fn set_identity_row(&mut self, i: usize) {
        let r = self.pattern.row_range(i);
        for k in r {
            self.values[k] = if self.pattern.cols[k] == i { 1.0 } else { 0.0 };
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row_values(i).iter().sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + scale * other` on the same pattern.
    pub fn axpy(&mut self, scale: f64, other: &SparseOperator) {
        assert!(self.same_pattern(&other.pattern), "pattern mismatch in axpy");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Copies the entries onto a larger pattern that contains this one.
    pub fn embed(&self, target: Arc<Pattern>) -> Self {
        let mut out = Self::zeros(target);
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                out.add(i, j, v);
            }
        }
        out
    }

    pub fn transpose_equals(&self, tol: f64) -> bool {
        (0..self.dim()).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Solves `self * x = b` by banded LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = BandedLu::factor(self)?;
        Ok(lu.solve(b))
    }
}

/// LU factorization with partial row pivoting in LAPACK-style band storage.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.pattern().bandwidth();
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        for i in 0..n {
            for (j, v) in a.row(i) {
                ab[j * ldab + kv + i - j] += v;
            }
        }
        let idx = |i: usize, j: usize| j * ldab + kv + i - j;
        let mut ipiv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = ab[idx(j, j)].abs();
            for t in 1..=km {
                let v = ab[idx(j + t, j)].abs();
                if v > best {
                    best = v;
                    p = t;
                }
            }
            ipiv[j] = j + p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix { column: j });
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    ab.swap(idx(j, c), idx(j + p, c));
                }
            }
            let piv = ab[idx(j, j)];
            for i in j + 1..=j + km {
                ab[idx(i, j)] /= piv;
            }
            for c in j + 1..=ju {
                let a_jc = ab[idx(j, c)];
                if a_jc != 0.0 {
                    let base_c = c * ldab + kv - c;
                    let base_j = j * ldab + kv - j;
                    for i in j + 1..=j + km {
                        ab[base_c + i] -= ab[base_j + i] * a_jc;
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let idx = |i: usize, j: usize| j * self.ldab + kv + i - j;
        let mut x = b.to_vec();
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..=j + km {
                    x[i] -= self.ab[idx(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[idx(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    x[i] -= self.ab[idx(i, j)] * xj;
                }
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> SparseOperator {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![i];
                if i > 0 {
                    r.push(i - 1);
                }
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        let mut a = SparseOperator::zeros(Arc::new(Pattern::from_rows(rows)));
        for i in 0..n {
            a.set(i, i, d);
            if i > 0 {
                a.set(i, i - 1, lo);
            }
            if i + 1 < n {
                a.set(i, i + 1, up);
            }
        }
        a
    }

    #[test]
    fn solves_tridiagonal() {
        let a = tridiag(6, -1.0, 4.0, -2.0);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let b = a.mul_vec(&x);
        let y = a.solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Zero diagonal everywhere: only solvable with row exchanges.
        let a = tridiag(6, 1.0, 0.0, 1.0);
        let x = vec![1.0, -2.0, 3.0, 0.5, 2.0, -1.5];
        let b = a.mul_vec(&x);
        let y = a.solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = tridiag(3, 0.0, 0.0, 0.0);
        assert!(matches!(a.solve(&[1.0; 3]), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn squared_pattern_of_path_graph() {
        let p = Pattern::from_rows(vec![vec![0, 1], vec![0, 1, 2], vec![1, 2, 3], vec![2, 3]]);
        let p2 = p.squared();
        assert_eq!(p2.row(0), &[0, 1, 2]);
        assert_eq!(p2.row(1), &[0, 1, 2, 3]);
        assert_eq!(p2.bandwidth(), (2, 2));
    }
}
