//! Compressed-row sparse matrices.

use super::dense::DenseMatrix;
use super::LinearOperator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sparse matrix in compressed-row layout with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<S> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> SparseMatrix<S> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![S::one(); n])
    }

    pub fn diagonal(d: &[S]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, S)]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    rows: nrows,
                    cols: ncols,
                });
            }
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut slot = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![S::zero(); triplets.len()];
        for &(r, c, v) in triplets {
            cols[slot[r]] = c;
            vals[slot[r]] = v;
            slot[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| cols[k]);
            let mut last: Option<usize> = None;
            for &k in &order {
                if last == Some(cols[k]) {
                    *values.last_mut().expect("entry") += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                    last = Some(cols[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Keeps the entries of `d` whose magnitude exceeds `drop_tol`.
    pub fn from_dense(d: &DenseMatrix<S>, drop_tol: S) -> Self {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v.abs() > drop_tol {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[S]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => S::zero(),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, S)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((i, j, v));
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.ncols, "sparse matvec dimension");
        assert_eq!(y.len(), self.nrows, "sparse matvec output dimension");
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = S::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    /// Computes `Aᵀ x`.
    pub fn transpose_mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.nrows, "sparse transposed matvec dimension");
        let mut y = vec![S::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices in range")
    }

    pub fn scaled(&self, alpha: S) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= alpha;
        }
        out
    }

    /// Computes `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: S, other: &Self, beta: S) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows * self.ncols,
                found: other.nrows * other.ncols,
            });
        }
        let mut t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let mut t = Vec::new();
        let mut acc = vec![S::zero(); other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut list = Vec::new();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &b) in ocols.iter().zip(ovals) {
                    if !touched[j] {
                        touched[j] = true;
                        list.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &list {
                t.push((i, j, acc[j]));
                acc[j] = S::zero();
                touched[j] = false;
            }
            list.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, &t)
    }

    /// Explicit Kronecker product `a ⊗ b`.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut t = Vec::with_capacity(a.nnz() * b.nnz());
        for (i, k, va) in a.triplets() {
            for (j, l, vb) in b.triplets() {
                t.push((i * b.nrows + j, k * b.ncols + l, va * vb));
            }
        }
        Self::from_triplets(a.nrows * b.nrows, a.ncols * b.ncols, &t).expect("indices in range")
    }

    /// Assembles the symmetric block matrix `[[a, b], [bᵀ, c]]`.
    pub fn block2x2(a: &Self, b: &Self, c: &Self) -> Result<Self> {
        if a.nrows != b.nrows || b.ncols != c.ncols || a.nrows != a.ncols || c.nrows != c.ncols {
            return Err(Error::DimensionMismatch {
                expected: a.nrows,
                found: b.nrows,
            });
        }
        let n = a.nrows;
        let mut t = a.triplets();
        for (i, j, v) in b.triplets() {
            t.push((i, n + j, v));
            t.push((n + j, i, v));
        }
        t.extend(c.triplets().into_iter().map(|(i, j, v)| (n + i, n + j, v)));
        Self::from_triplets(n + c.nrows, n + c.ncols, &t)
    }

    pub fn diag(&self) -> Vec<S> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
    }

    /// Returns the first entry violating `|a_ij - a_ji| <= tol * max|a|`.
    pub fn check_symmetric(&self, rel_tol: S) -> Result<()> {
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: self.ncols,
            });
        }
        let tol = rel_tol * self.max_abs();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if (v - self.get(j, i)).abs() > tol {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DenseMatrix<S> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }
}

impl<S: Scalar> LinearOperator<S> for SparseMatrix<S> {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply(&self, x: &[S]) -> Vec<S> {
        self.mul_vec(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        let r = SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]);
        assert!(matches!(r, Err(Error::IndexOutOfBounds { .. })));
    }

    #[test]
    fn matmul_and_transpose_match_dense() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap();
        let b = a.transpose();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.get(0, 0), 5.0);
        assert_eq!(c.get(1, 1), 9.0);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(a.transpose_mul_vec(&[1.0, 1.0]), vec![1.0, 3.0, 2.0]);
    }
}
