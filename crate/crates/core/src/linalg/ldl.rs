//! Envelope (profile) LDLᵀ factorization with reverse Cuthill-McKee ordering.
//!
//! Assembled space-time matrices are banded after reordering, so the envelope
//! stays narrow and the factorization is cheap.

use std::collections::VecDeque;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reverse Cuthill-McKee permutation of the symmetrized sparsity graph.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<S: Scalar>(a: &SparseMatrix<S>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = vec![start];
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                if level[w] > depth {
                    depth = level[w];
                    last.clear();
                }
                if level[w] == depth {
                    last.push(w);
                }
                queue.push_back(w);
            }
        }
    }
    (last, depth)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut v = seed;
    let (mut last, mut depth) = bfs_levels(v, adj);
    for _ in 0..8 {
        let cand = *last.iter().min_by_key(|&&w| (degree[w], w)).unwrap_or(&v);
        let (l2, d2) = bfs_levels(cand, adj);
        if d2 <= depth {
            break;
        }
        v = cand;
        last = l2;
        depth = d2;
    }
    v
}

/// Symmetric envelope LDLᵀ factorization, pivots in the RCM order.
#[derive(Debug, Clone)]
struct EnvelopeLdl<S> {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    lower: Vec<S>,
    d: Vec<S>,
}

impl<S: Scalar> EnvelopeLdl<S> {
    fn factor(a: &SparseMatrix<S>, require_positive: bool) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        a.check_symmetric(S::lit(1e-12))?;
        let perm = reverse_cuthill_mckee(a);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = iperm[old_i];
            let (cols, _) = a.row(old_i);
            for &old_j in cols {
                let j = iperm[old_j];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for i in 0..n {
            row_start.push(row_start[i] + (i - first[i]));
        }
        let mut lower = vec![S::zero(); row_start[n]];
        let mut d = vec![S::zero(); n];
        let scale = a.max_abs();
        let mut work = vec![S::zero(); n];
        for i in 0..n {
            let fi = first[i];
            for w in work[fi..=i].iter_mut() {
                *w = S::zero();
            }
            let (cols, vals) = a.row(perm[i]);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = iperm[old_j];
                if j <= i {
                    work[j] += v;
                }
            }
            // work[j] becomes u_ij = l_ij d_j for j < i.
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let lj = &lower[row_start[j]..row_start[j + 1]];
                let mut s = work[j];
                for k in lo..j {
                    s -= work[k] * lj[k - fj];
                }
                work[j] = s;
            }
            let mut di = work[i];
            let li = row_start[i];
            for j in fi..i {
                let l = work[j] / d[j];
                di -= work[j] * l;
                lower[li + (j - fi)] = l;
            }
            if !di.is_finite() || di.abs() <= S::epsilon() * S::lit(16.0) * scale {
                if require_positive {
                    return Err(Error::NotPositiveDefinite {
                        index: perm[i],
                        pivot: di.as_f64(),
                    });
                }
                return Err(Error::Singular { index: perm[i] });
            }
            if require_positive && di < S::zero() {
                return Err(Error::NotPositiveDefinite {
                    index: perm[i],
                    pivot: di.as_f64(),
                });
            }
            d[i] = di;
        }
        Ok(Self {
            n,
            perm,
            first,
            row_start,
            lower,
            d,
        })
    }

    fn solve(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.n, "factorization solve dimension");
        let mut y: Vec<S> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let li = &self.lower[self.row_start[i]..self.row_start[i + 1]];
            let mut s = y[i];
            for (k, &l) in li.iter().enumerate() {
                s -= l * y[fi + k];
            }
            y[i] = s;
        }
        for (yi, &di) in y.iter_mut().zip(&self.d) {
            *yi /= di;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let li = &self.lower[self.row_start[i]..self.row_start[i + 1]];
            for (k, &l) in li.iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![S::zero(); self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < S::zero()).count()
    }
}

/// Direct solver for symmetric positive definite sparse matrices.
#[derive(Debug, Clone)]
pub struct SpdFactorization<S> {
    inner: EnvelopeLdl<S>,
}

impl<S: Scalar> SpdFactorization<S> {
    /// Factors `a`; fails with [`Error::NotPositiveDefinite`] on a non-positive pivot.
    pub fn new(a: &SparseMatrix<S>) -> Result<Self> {
        Ok(Self {
            inner: EnvelopeLdl::factor(a, true)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        self.inner.solve(b)
    }

    pub fn envelope_size(&self) -> usize {
        self.inner.envelope_size()
    }
}

/// Solves `A x = b` with a positive definite factor. Free-function form of
/// [`SpdFactorization::solve`].
pub fn spd_solve<S: Scalar>(fact: &SpdFactorization<S>, b: &[S]) -> Result<Vec<S>> {
    if b.len() != fact.dim() {
        return Err(Error::DimensionMismatch {
            expected: fact.dim(),
            found: b.len(),
        });
    }
    Ok(fact.solve(b))
}

/// Direct solver for symmetric quasi-definite matrices `[[A, B], [Bᵀ, -C]]`
/// with `A`, `C` positive definite; any symmetric ordering admits LDLᵀ.
#[derive(Debug, Clone)]
pub struct QuasiDefiniteFactorization<S> {
    inner: EnvelopeLdl<S>,
}

impl<S: Scalar> QuasiDefiniteFactorization<S> {
    pub fn new(a: &SparseMatrix<S>) -> Result<Self> {
        Ok(Self {
            inner: EnvelopeLdl::factor(a, false)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        self.inner.solve(b)
    }

    pub fn negative_pivots(&self) -> usize {
        self.inner.negative_pivots()
    }
}
