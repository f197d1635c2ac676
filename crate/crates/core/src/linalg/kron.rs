//! Kronecker-structured operators in the time-major tensor layout.
//!
//! A tensor coefficient vector stores entry `(i, j)` (time index `i`, space
//! index `j`) at position `i * n_space + j`.

use super::ldl::SpdFactorization;
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The operator `time ⊗ space`, applied without forming the product.
#[derive(Debug, Clone)]
pub struct KroneckerOperator<S> {
    time: SparseMatrix<S>,
    space: SparseMatrix<S>,
}

impl<S: Scalar> KroneckerOperator<S> {
    pub fn new(time: SparseMatrix<S>, space: SparseMatrix<S>) -> Self {
        Self { time, space }
    }

    pub fn time(&self) -> &SparseMatrix<S> {
        &self.time
    }

    pub fn space(&self) -> &SparseMatrix<S> {
        &self.space
    }

    pub fn nrows(&self) -> usize {
        self.time.nrows() * self.space.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.time.ncols() * self.space.ncols()
    }

    /// Computes `(time ⊗ space) v`.
    pub fn apply(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: v.len(),
            });
        }
        Ok(kron_apply_parts(&self.time, &self.space, v, false))
    }

    /// Computes `(time ⊗ space)ᵀ v`.
    pub fn apply_transpose(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows(),
                found: v.len(),
            });
        }
        Ok(kron_apply_parts(&self.time, &self.space, v, true))
    }

    pub fn to_sparse(&self) -> SparseMatrix<S> {
        SparseMatrix::kron(&self.time, &self.space)
    }
}

/// Free-function form of [`KroneckerOperator::apply`].
pub fn kron_apply<S: Scalar>(op: &KroneckerOperator<S>, v: &[S]) -> Result<Vec<S>> {
    op.apply(v)
}

fn kron_apply_parts<S: Scalar>(
    time: &SparseMatrix<S>,
    space: &SparseMatrix<S>,
    v: &[S],
    transpose: bool,
) -> Vec<S> {
    let (t_in, t_out) = if transpose {
        (time.nrows(), time.ncols())
    } else {
        (time.ncols(), time.nrows())
    };
    let (x_in, x_out) = if transpose {
        (space.nrows(), space.ncols())
    } else {
        (space.ncols(), space.nrows())
    };
    // Spatial factor on each time row.
    let mut w = vec![S::zero(); t_in * x_out];
    for i in 0..t_in {
        let row = &v[i * x_in..(i + 1) * x_in];
        let out = if transpose {
            space.transpose_mul_vec(row)
        } else {
            space.mul_vec(row)
        };
        w[i * x_out..(i + 1) * x_out].copy_from_slice(&out);
    }
    // Temporal factor across rows.
    let mut y = vec![S::zero(); t_out * x_out];
    for r in 0..time.nrows() {
        let (cols, vals) = time.row(r);
        for (&c, &a) in cols.iter().zip(vals) {
            let (dst, src) = if transpose { (c, r) } else { (r, c) };
            let src_row = &w[src * x_out..(src + 1) * x_out];
            for (yk, &wk) in y[dst * x_out..(dst + 1) * x_out].iter_mut().zip(src_row) {
                *yk += a * wk;
            }
        }
    }
    y
}

/// Solves `(time ⊗ space) x = b` for SPD factors by factor-wise solves.
#[derive(Debug, Clone)]
pub struct KroneckerSolver<S> {
    time: SpdFactorization<S>,
    space: SpdFactorization<S>,
}

impl<S: Scalar> KroneckerSolver<S> {
    pub fn new(time: &SparseMatrix<S>, space: &SparseMatrix<S>) -> Result<Self> {
        Ok(Self {
            time: SpdFactorization::new(time)?,
            space: SpdFactorization::new(space)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.time.dim() * self.space.dim()
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let nt = self.time.dim();
        let nx = self.space.dim();
        assert_eq!(b.len(), nt * nx, "Kronecker solve dimension");
        let mut w = vec![S::zero(); nt * nx];
        for i in 0..nt {
            let out = self.space.solve(&b[i * nx..(i + 1) * nx]);
            w[i * nx..(i + 1) * nx].copy_from_slice(&out);
        }
        let mut col = vec![S::zero(); nt];
        for j in 0..nx {
            for i in 0..nt {
                col[i] = w[i * nx + j];
            }
            let out = self.time.solve(&col);
            for i in 0..nt {
                w[i * nx + j] = out[i];
            }
        }
        w
    }
}
