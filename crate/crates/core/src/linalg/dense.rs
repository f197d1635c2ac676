//! Small dense matrices: Cholesky factorization and symmetric eigensolvers.

use std::ops::{Index, IndexMut};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<S>]) -> Self {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| columns[j][i])
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "dense matvec dimension");
        (0..self.rows).map(|i| super::dot(self.row(i), x)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dense matmul dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                let orow = other.row(k);
                let base = i * other.cols;
                for (j, &b) in orow.iter().enumerate() {
                    out.data[base + j] += a * b;
                }
            }
        }
        out
    }

    pub fn scaled(&self, alpha: S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-S::one()))
    }

    /// Replaces the matrix by its symmetric part.
    pub fn symmetrize(&mut self) {
        let half = S::lit(0.5);
        for i in 0..self.rows {
            for j in 0..i {
                let v = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn cholesky(&self) -> Result<Cholesky<S>> {
        Cholesky::new(self)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Eigenvalues are returned in ascending order; eigenvectors are the
    /// columns of the returned matrix.
    pub fn symmetric_eigen(&self) -> Result<(Vec<S>, DenseMatrix<S>)> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Self::identity(n);
        let eps = S::epsilon();
        let fro = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum::<S>().sqrt();
        let floor = eps * eps * fro;
        let max_sweeps = 100;
        for sweep in 0..=max_sweeps {
            let mut rotated = false;
            let mut largest = S::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    largest = largest.max(apq.abs());
                    if apq.abs() <= floor || apq.abs() <= eps * (a[(p, p)] * a[(q, q)]).abs().sqrt() {
                        continue;
                    }
                    if sweep == max_sweeps {
                        return Err(Error::EigenNotConverged {
                            iterations: sweep,
                            best: f64::NAN,
                            residual: largest.as_f64(),
                        });
                    }
                    rotated = true;
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (S::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("finite eigenvalues"));
        let vals = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        Ok((vals, vecs))
    }

    /// Solves `A x = λ B x` for symmetric `A` and symmetric positive definite `B`.
    ///
    /// Eigenvalues ascend; eigenvector columns are `B`-orthonormal.
    pub fn generalized_symmetric_eigen(a: &Self, b: &Self) -> Result<(Vec<S>, DenseMatrix<S>)> {
        let chol = b.cholesky()?;
        let n = a.rows;
        // C = L⁻¹ A L⁻ᵀ
        let mut w = Self::zeros(n, n);
        for j in 0..n {
            let col = chol.solve_lower(&a.column(j));
            for i in 0..n {
                w[(i, j)] = col[i];
            }
        }
        let wt = w.transpose();
        let mut c = Self::zeros(n, n);
        for j in 0..n {
            let col = chol.solve_lower(&wt.column(j));
            for i in 0..n {
                c[(i, j)] = col[i];
            }
        }
        let (vals, y) = c.symmetric_eigen()?;
        let mut x = Self::zeros(n, n);
        for j in 0..n {
            let col = chol.solve_upper(&y.column(j));
            for i in 0..n {
                x[(i, j)] = col[i];
            }
        }
        Ok((vals, x))
    }

    /// Smallest eigenvalue of a symmetric matrix.
    pub fn min_eigenvalue(&self) -> Result<S> {
        Ok(self.symmetric_eigen()?.0[0])
    }
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for DenseMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> LinearOperator<S> for DenseMatrix<S> {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[S]) -> Vec<S> {
        self.mul_vec(x)
    }
}

/// Dense Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<S> {
    l: DenseMatrix<S>,
}

impl<S: Scalar> Cholesky<S> {
    pub fn new(a: &DenseMatrix<S>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= S::zero() || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &DenseMatrix<S> {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[S]) -> Vec<S> {
        let n = self.l.nrows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for (k, &yk) in y[..i].iter().enumerate() {
                s -= self.l[(i, k)] * yk;
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[S]) -> Vec<S> {
        let n = self.l.nrows();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                s -= self.l[(k, i)] * xk;
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        self.solve_upper(&self.solve_lower(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_small_matrix() {
        let a = DenseMatrix::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        let (vals, vecs) = a.symmetric_eigen().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        let v0 = vecs.column(0);
        assert!((v0[0] + v0[1]).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn generalized_eigenvectors_are_b_orthonormal() {
        let a = DenseMatrix::from_rows(&[vec![4.0f64, 1.0], vec![1.0, 3.0]]);
        let b = DenseMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let (vals, x) = DenseMatrix::generalized_symmetric_eigen(&a, &b).unwrap();
        let g = x.transpose().matmul(&b).matmul(&x);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-13);
            }
        }
        let ax = a.mul_vec(&x.column(1));
        let bx = b.mul_vec(&x.column(1));
        for i in 0..2 {
            assert!((ax[i] - vals[1] * bx[i]).abs() < 1e-12);
        }
    }
}
