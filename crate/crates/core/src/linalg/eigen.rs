//! Extremal eigenvalues of self-adjoint operators by Lanczos iteration with
//! full reorthogonalization.
//!
//! The Lanczos basis is orthonormal in an inner product `⟨x, y⟩_W = xᵀ W y`
//! in which the iteration operator `K` is self-adjoint. For the pencil
//! `A x = λ B x` that means `K = B⁻¹A`, `W = B`; for the preconditioned
//! operator `P⁻¹A` it means `W = A`.

use super::ldl::SpdFactorization;
use super::sparse::SparseMatrix;
use super::{axpy, dot};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Which end of the spectrum to resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

/// Stopping parameters for the Lanczos iteration.
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative Ritz residual required for convergence.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 600,
            seed: 0x5eed_1a7c,
        }
    }
}

/// Converged Ritz pair.
#[derive(Debug, Clone)]
pub struct EigenPair<S> {
    pub value: S,
    pub vector: Vec<S>,
    /// Rayleigh quotient of `vector`, recomputed from the operators.
    pub rayleigh: S,
    pub residual: S,
    pub iterations: usize,
}

type Op<'a, S> = &'a dyn Fn(&[S]) -> Vec<S>;

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` by implicit QL. Each row of `z` is rotated along, so
/// passing unit rows yields the corresponding components of the eigenvectors.
fn tridiagonal_ql<S: Scalar>(d: &mut [S], e_in: &[S], z: &mut [Vec<S>]) -> Result<()> {
    let n = d.len();
    let mut e = vec![S::zero(); n];
    e[..n.saturating_sub(1)].copy_from_slice(&e_in[..n.saturating_sub(1)]);
    let two = S::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= S::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNotConverged {
                    iterations: iter,
                    best: d[l].as_f64(),
                    residual: e[l].as_f64(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(S::one());
            g = d[m] - d[l] + e[l] / (g + if g >= S::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (S::one(), S::one(), S::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == S::zero() {
                    d[i + 1] -= p;
                    e[m] = S::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = S::zero();
        }
    }
    Ok(())
}

struct LanczosOutcome<S> {
    min: EigenPair<S>,
    max: EigenPair<S>,
    min_converged: bool,
    max_converged: bool,
}

fn lanczos<S: Scalar>(
    dim: usize,
    apply_k: Op<'_, S>,
    apply_w: Op<'_, S>,
    projector: Option<Op<'_, S>>,
    need: (bool, bool),
    opts: &EigenOptions,
) -> Result<LanczosOutcome<S>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("empty eigenproblem".into()));
    }
    let project = |v: Vec<S>| match projector {
        Some(p) => p(&v),
        None => v,
    };
    let mut rng = SeededRng::new(opts.seed);
    let mut q = project(rng.normal_vec::<S>(dim));
    let mut wq = apply_w(&q);
    let nrm = dot(&q, &wq).max(S::zero()).sqrt();
    if nrm == S::zero() {
        return Err(Error::InvalidParameter("projector annihilates the start vector".into()));
    }
    q.iter_mut().for_each(|x| *x /= nrm);
    wq.iter_mut().for_each(|x| *x /= nrm);
    let mut basis = vec![q];
    let mut wbasis = vec![wq];
    let mut alphas: Vec<S> = Vec::new();
    let mut betas: Vec<S> = Vec::new();
    let tol = S::lit(opts.tol);
    let max_steps = opts.max_iter.min(dim).max(1);
    let mut last_beta;
    let mut steps;
    let mut status;
    loop {
        let j = alphas.len();
        let mut r = project(apply_k(&basis[j]));
        let alpha = dot(&wbasis[j], &r);
        for _ in 0..2 {
            for (v, wv) in basis.iter().zip(&wbasis) {
                let c = dot(wv, &r);
                axpy(-c, v, &mut r);
            }
        }
        alphas.push(alpha);
        let wr = apply_w(&r);
        let beta = dot(&r, &wr).max(S::zero()).sqrt();
        last_beta = beta;
        steps = j + 1;

        let mut d = alphas.clone();
        let mut last_row = vec![vec![S::zero(); d.len()]];
        last_row[0][d.len() - 1] = S::one();
        tridiagonal_ql(&mut d, &betas, &mut last_row)?;
        let (imin, imax) = extremes(&d);
        let scale = d.iter().fold(S::zero(), |m, &x| m.max(x.abs()));
        let floor = S::lit(1e-8) * scale;
        let conv = |i: usize| beta * last_row[0][i].abs() <= tol * d[i].abs().max(floor);
        status = (conv(imin), conv(imax));
        let invariant = beta <= S::lit(1e-13) * scale.max(S::min_positive_value());
        if invariant || steps >= dim {
            status = (true, true);
        }
        let done = (status.0 || !need.0) && (status.1 || !need.1);
        if done || invariant || steps >= max_steps {
            break;
        }
        betas.push(beta);
        let inv = S::one() / beta;
        basis.push(r.iter().map(|&x| x * inv).collect());
        wbasis.push(wr.iter().map(|&x| x * inv).collect());
    }

    let m = alphas.len();
    let mut d = alphas;
    let mut rows: Vec<Vec<S>> = (0..m)
        .map(|i| {
            let mut row = vec![S::zero(); m];
            row[i] = S::one();
            row
        })
        .collect();
    tridiagonal_ql(&mut d, &betas[..m - 1], &mut rows)?;
    let (imin, imax) = extremes(&d);
    let ritz = |idx: usize| -> EigenPair<S> {
        let mut x = vec![S::zero(); dim];
        for (k, v) in basis.iter().enumerate().take(m) {
            axpy(rows[k][idx], v, &mut x);
        }
        let kx = project(apply_k(&x));
        let wx = apply_w(&x);
        let rayleigh = dot(&wx, &kx) / dot(&wx, &x);
        EigenPair {
            value: d[idx],
            vector: x,
            rayleigh,
            residual: last_beta * rows[m - 1][idx].abs(),
            iterations: steps,
        }
    };
    Ok(LanczosOutcome {
        min: ritz(imin),
        max: ritz(imax),
        min_converged: status.0,
        max_converged: status.1,
    })
}

fn extremes<S: Scalar>(d: &[S]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, &v) in d.iter().enumerate() {
        if v < d[imin] {
            imin = i;
        }
        if v > d[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

fn not_converged<S: Scalar>(p: &EigenPair<S>) -> Error {
    Error::EigenNotConverged {
        iterations: p.iterations,
        best: p.value.as_f64(),
        residual: p.residual.as_f64(),
    }
}

/// Smallest and largest eigenpairs of `K`, self-adjoint in the `W` inner product.
pub fn lanczos_extremes<S: Scalar>(
    dim: usize,
    apply_k: Op<'_, S>,
    apply_w: Op<'_, S>,
    projector: Option<Op<'_, S>>,
    opts: &EigenOptions,
) -> Result<(EigenPair<S>, EigenPair<S>)> {
    let out = lanczos(dim, apply_k, apply_w, projector, (true, true), opts)?;
    if !out.min_converged {
        return Err(not_converged(&out.min));
    }
    if !out.max_converged {
        return Err(not_converged(&out.max));
    }
    Ok((out.min, out.max))
}

/// One extremal eigenpair of `A x = λ B x` given as operators, with `solve_b`
/// applying `B⁻¹`. An optional `projector` (self-adjoint in the `B` inner
/// product) restricts the iteration to a constraint subspace.
pub fn extremal_generalized_eigen_op<S: Scalar>(
    dim: usize,
    apply_a: Op<'_, S>,
    apply_b: Op<'_, S>,
    solve_b: Op<'_, S>,
    which: Which,
    projector: Option<Op<'_, S>>,
    opts: &EigenOptions,
) -> Result<EigenPair<S>> {
    let k = |x: &[S]| solve_b(&apply_a(x));
    let need = match which {
        Which::Smallest => (true, false),
        Which::Largest => (false, true),
    };
    let out = lanczos(dim, &k, apply_b, projector, need, opts)?;
    let (pair, ok) = match which {
        Which::Smallest => (out.min, out.min_converged),
        Which::Largest => (out.max, out.max_converged),
    };
    if ok {
        Ok(pair)
    } else {
        Err(not_converged(&pair))
    }
}

/// One extremal eigenpair of the sparse pencil `(A, B)`, `B` positive definite.
pub fn extremal_generalized_eigen<S: Scalar>(
    a: &SparseMatrix<S>,
    b: &SparseMatrix<S>,
    which: Which,
    projector: Option<Op<'_, S>>,
    opts: &EigenOptions,
) -> Result<EigenPair<S>> {
    let fb = SpdFactorization::new(b)?;
    extremal_generalized_eigen_op(
        a.nrows(),
        &|x| a.mul_vec(x),
        &|x| b.mul_vec(x),
        &|x| fb.solve(x),
        which,
        projector,
        opts,
    )
}

/// Spectral condition number `λ_max / λ_min` of `P⁻¹A` for SPD `A` and `P`.
pub fn condition_number_estimate<S: Scalar>(
    apply_a: Op<'_, S>,
    apply_pinv: Op<'_, S>,
    dim: usize,
    opts: &EigenOptions,
) -> Result<S> {
    let k = |x: &[S]| apply_pinv(&apply_a(x));
    let (lo, hi) = lanczos_extremes(dim, &k, apply_a, None, opts)?;
    if lo.value <= S::zero() {
        return Err(Error::NotPositiveDefinite {
            index: 0,
            pivot: lo.value.as_f64(),
        });
    }
    Ok(hi.value / lo.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ql_on_two_by_two() {
        let mut d = vec![2.0f64, 2.0];
        let mut z = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        tridiagonal_ql(&mut d, &[1.0], &mut z).unwrap();
        let mut s = d.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn identity_pencil() {
        let i = SparseMatrix::<f64>::identity(4);
        let p = extremal_generalized_eigen(&i, &i, Which::Largest, None, &EigenOptions::default()).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_pencil_smallest() {
        let a = SparseMatrix::diagonal(&[1.0, 4.0]);
        let b = SparseMatrix::<f64>::identity(2);
        let p = extremal_generalized_eigen(&a, &b, Which::Smallest, None, &EigenOptions::default()).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_condition_number() {
        let a = SparseMatrix::diagonal(&[1.0, 100.0]);
        let k = condition_number_estimate(&|x| a.mul_vec(x), &|x: &[f64]| x.to_vec(), 2, &EigenOptions::default()).unwrap();
        assert!((k - 100.0).abs() < 1e-8);
        let kk = condition_number_estimate(&|x| a.mul_vec(x), &|x: &[f64]| vec![x[0], x[1] / 100.0], 2, &EigenOptions::default()).unwrap();
        assert!((kk - 1.0).abs() < 1e-10);
    }
}
