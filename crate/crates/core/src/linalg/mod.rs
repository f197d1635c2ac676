//! Sparse and dense linear algebra, Kronecker-structured operators and
//! extremal eigenvalue estimation.

pub mod dense;
pub mod eigen;
pub mod kron;
pub mod ldl;
pub mod sparse;

use crate::scalar::Scalar;

pub use dense::{Cholesky, DenseMatrix};
pub use eigen::{
    condition_number_estimate, extremal_generalized_eigen, extremal_generalized_eigen_op, lanczos_extremes,
    EigenOptions, EigenPair, Which,
};
pub use kron::{kron_apply, KroneckerOperator, KroneckerSolver};
pub use ldl::{reverse_cuthill_mckee, spd_solve, QuasiDefiniteFactorization, SpdFactorization};
pub use sparse::SparseMatrix;

/// A linear map on coefficient vectors.
pub trait LinearOperator<S: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[S]) -> Vec<S>;
}

/// Wraps a closure as a square [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<S: Scalar, F: Fn(&[S]) -> Vec<S>> LinearOperator<S> for FnOperator<F> {
    fn nrows(&self) -> usize {
        self.dim
    }
    fn ncols(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[S]) -> Vec<S> {
        (self.f)(x)
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn norm_inf<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

/// `y += alpha * x`
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<S: Scalar>(alpha: S, x: &mut [S]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scaled<S: Scalar>(alpha: S, a: &[S]) -> Vec<S> {
    a.iter().map(|&x| alpha * x).collect()
}
