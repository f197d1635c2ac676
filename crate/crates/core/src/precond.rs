//! Block-diagonal preconditioner for the trial-space Riesz map in tensor
//! form: a hierarchical wavelet basis in time decouples the temporal factor,
//! and every wavelet block is inverted through `(A_x + α M_x)⁻¹ A_x (A_x + α M_x)⁻¹`.
//!
//! The operator being preconditioned is
//! `R = M_t ⊗ A_x + (M_t + A_t) ⊗ M_x A_x⁻¹ M_x`, the Gram matrix of
//! `|||z|||² = ‖z‖²_Y + ‖z‖²_{H¹(0,T) ⊗ (X_x)'}`.

use crate::error::{Error, Result};
use crate::linalg::{condition_number_estimate, dot, DenseMatrix, EigenOptions, KroneckerOperator, SparseMatrix, SpdFactorization};
use crate::scalar::Scalar;
use crate::spaces::{assemble_bilinear, BasisSpec, FeSpace1D, Mesh1D, TensorSpacePair};

/// L2-normalized hierarchical piecewise-linear basis of a dyadic temporal mesh.
#[derive(Debug, Clone)]
pub struct TimeWaveletBasis<S> {
    /// Wavelet-to-nodal transform: column `k` holds the nodal values of wavelet `k`.
    pub transform: SparseMatrix<S>,
    /// `‖ψ‖_{H¹}` per wavelet.
    pub alphas: Vec<S>,
    /// Number of dyadic refinement levels.
    pub levels: usize,
    /// Refinement level of each wavelet (0 for the two coarsest hats).
    pub level_of: Vec<usize>,
}

impl<S: Scalar> TimeWaveletBasis<S> {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

fn dyadic_levels<S: Scalar>(mesh: &Mesh1D<S>) -> Result<usize> {
    let n = mesh.num_elements();
    if !n.is_power_of_two() {
        return Err(Error::InvalidMesh(format!("{n} elements is not a power of two")));
    }
    let h = (mesh.end() - mesh.start()) / S::from_count(n);
    let tol = S::lit(1e-10) * h;
    for (i, &p) in mesh.points().iter().enumerate() {
        if (p - (mesh.start() + h * S::from_count(i))).abs() > tol {
            return Err(Error::InvalidMesh("temporal mesh is not uniform".into()));
        }
    }
    Ok(n.trailing_zeros() as usize)
}

/// Construction of the detail functions of [`TimeWaveletBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveletKind {
    /// Fine hat minus a quarter of each coarse neighbour hat (a half for
    /// boundary neighbours); vanishing integral.
    #[default]
    Lifted,
    /// Semi-orthogonal prewavelets: each detail function is supported on at
    /// most five fine hats and is L2-orthogonal to the whole coarser space.
    /// Perfect L2 conditioning across levels, but weaker H1 conditioning.
    Prewavelet,
}

/// Nodal values on the finest mesh of a function given by nodal values on
/// the mesh `levels - level` dyadic refinements coarser.
fn prolong_to_finest<S: Scalar>(coarse: &[S], level: usize, levels: usize) -> Vec<S> {
    let step = 1usize << (levels - level);
    let n = (coarse.len() - 1) * step;
    (0..=n)
        .map(|i| {
            let (k, r) = (i / step, i % step);
            if r == 0 {
                coarse[k]
            } else {
                let f = S::from_count(r) / S::from_count(step);
                coarse[k] * (S::one() - f) + coarse[k + 1] * f
            }
        })
        .collect()
}

/// Detail function at the odd node `j` of the uniform level mesh with `n`
/// elements of size `h`, as nodal values on that mesh.
fn detail_function<S: Scalar>(kind: WaveletKind, j: usize, n: usize, h: S) -> Result<Vec<S>> {
    let mut psi = vec![S::zero(); n + 1];
    match kind {
        WaveletKind::Lifted => {
            psi[j] = S::one();
            for (c, boundary) in [(j - 1, j == 1), (j + 1, j + 1 == n)] {
                let w = if boundary { S::lit(0.5) } else { S::lit(0.25) };
                let reach = 2.min(n);
                for (q, p) in psi.iter_mut().enumerate() {
                    let d = q.abs_diff(c);
                    if d < reach {
                        *p -= w * (S::one() - S::from_count(d) / S::from_count(2));
                    }
                }
            }
        }
        WaveletKind::Prewavelet => {
            let support: Vec<usize> = (j.saturating_sub(2)..=(j + 2).min(n)).collect();
            let coarse: Vec<usize> = (j.saturating_sub(3)..=(j + 3).min(n)).filter(|q| q % 2 == 0).collect();
            // ∫ φ_s · Φ_q with Φ_q the coarse hat at even node q, on the level mesh.
            let fine_coarse = |s: usize, q: usize| -> S {
                let hat = |i: usize| -> S {
                    match i.abs_diff(q) {
                        0 => S::one(),
                        1 => S::lit(0.5),
                        _ => S::zero(),
                    }
                };
                let diag = if s == 0 || s == n { S::lit(1.0 / 3.0) } else { S::lit(2.0 / 3.0) };
                let mut acc = diag * hat(s);
                if s > 0 {
                    acc += S::lit(1.0 / 6.0) * hat(s - 1);
                }
                if s < n {
                    acc += S::lit(1.0 / 6.0) * hat(s + 1);
                }
                acc * h
            };
            let g = DenseMatrix::from_fn(coarse.len(), support.len(), |r, c| fine_coarse(support[c], coarse[r]));
            let (vals, vecs) = g.transpose().matmul(&g).symmetric_eigen()?;
            let scale = vals.last().copied().unwrap_or(S::one()).abs().max(S::min_positive_value());
            if vals.len() > 1 && vals[1] <= S::lit(1e-10) * scale {
                return Err(Error::Singular { index: j });
            }
            let jj = support.iter().position(|&s| s == j).expect("odd node in support");
            let sign = vecs[(jj, 0)].signum();
            for (c, &s) in support.iter().enumerate() {
                psi[s] = sign * vecs[(c, 0)];
            }
        }
    }
    Ok(psi)
}

/// Hierarchical basis of the dyadic mesh `mesh` built from lifted hats; see [`build_time_wavelets_with`].
pub fn build_time_wavelets<S: Scalar>(mesh: &Mesh1D<S>) -> Result<TimeWaveletBasis<S>> {
    build_time_wavelets_with(mesh, WaveletKind::default())
}

/// Hierarchical basis of the dyadic mesh `mesh`: the two hats of the single
/// coarsest element, then per level one detail function per new node.
/// All functions are L2-normalized and `α_ψ = ‖ψ‖_{H¹}` is evaluated exactly.
pub fn build_time_wavelets_with<S: Scalar>(mesh: &Mesh1D<S>, kind: WaveletKind) -> Result<TimeWaveletBasis<S>> {
    let levels = dyadic_levels(mesh)?;
    let n = mesh.num_elements();
    let len = mesh.end() - mesh.start();
    let space = FeSpace1D::new(mesh.clone(), BasisSpec::CG1)?;
    let m = assemble_bilinear(&space, &space, false, false)?;
    let a = assemble_bilinear(&space, &space, true, true)?;

    let mut funcs: Vec<Vec<S>> = vec![prolong_to_finest(&[S::one(), S::zero()], 0, levels), prolong_to_finest(&[S::zero(), S::one()], 0, levels)];
    let mut level_of = vec![0, 0];
    for l in 1..=levels {
        let nl = 1usize << l;
        let h = len / S::from_count(nl);
        for j in (1..nl).step_by(2) {
            funcs.push(prolong_to_finest(&detail_function(kind, j, nl, h)?, l, levels));
            level_of.push(l);
        }
    }
    let mut trip = Vec::new();
    let mut alphas = Vec::with_capacity(funcs.len());
    for (k, f) in funcs.iter().enumerate() {
        let norm = dot(f, &m.mul_vec(f)).sqrt();
        let g: Vec<S> = f.iter().map(|&v| v / norm).collect();
        alphas.push((S::one() + dot(&g, &a.mul_vec(&g))).sqrt());
        for (i, &v) in g.iter().enumerate() {
            if v != S::zero() {
                trip.push((i, k, v));
            }
        }
    }
    Ok(TimeWaveletBasis {
        transform: SparseMatrix::from_triplets(n + 1, n + 1, &trip)?,
        alphas,
        levels,
        level_of,
    })
}

/// Applies `v ↦ (I_t ⊗ F) v` for a row-wise spatial map `F` on time-major data.
fn map_rows<S: Scalar>(v: &[S], nx: usize, f: impl Fn(usize, &[S]) -> Vec<S>) -> Vec<S> {
    let mut out = Vec::with_capacity(v.len());
    for (i, row) in v.chunks(nx).enumerate() {
        out.extend(f(i, row));
    }
    out
}

/// Matrix-free `R = M_t ⊗ A_x + (M_t + A_t) ⊗ M_x A_x⁻¹ M_x`.
#[derive(Debug, Clone)]
pub struct AltNormOperator<S> {
    first: KroneckerOperator<S>,
    time_h1: SparseMatrix<S>,
    mx: SparseMatrix<S>,
    ax: SpdFactorization<S>,
    nx: usize,
}

impl<S: Scalar> AltNormOperator<S> {
    pub fn new(mt: &SparseMatrix<S>, at: &SparseMatrix<S>, mx: &SparseMatrix<S>, ax: &SparseMatrix<S>) -> Result<Self> {
        Ok(Self {
            first: KroneckerOperator::new(mt.clone(), ax.clone()),
            time_h1: mt.linear_combination(S::one(), at, S::one())?,
            mx: mx.clone(),
            ax: SpdFactorization::new(ax)?,
            nx: ax.nrows(),
        })
    }

    pub fn dim(&self) -> usize {
        self.time_h1.nrows() * self.nx
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        let mut out = self.first.apply(v).expect("trial vector");
        let w = map_rows(v, self.nx, |_, r| self.mx.mul_vec(&self.ax.solve(&self.mx.mul_vec(r))));
        let second = KroneckerOperator::new(self.time_h1.clone(), SparseMatrix::identity(self.nx)).apply(&w).expect("trial vector");
        for (o, s) in out.iter_mut().zip(second) {
            *o += s;
        }
        out
    }

    /// Dense copy, for small oracles.
    pub fn to_dense(&self) -> DenseMatrix<S> {
        let n = self.dim();
        let cols: Vec<Vec<S>> = (0..n)
            .map(|j| {
                let mut e = vec![S::zero(); n];
                e[j] = S::one();
                self.apply(&e)
            })
            .collect();
        let mut d = DenseMatrix::from_columns(&cols);
        d.symmetrize();
        d
    }
}

/// The alternative-norm Gram operator on the trial space of `pair`.
pub fn assemble_rx_operator<S: Scalar>(pair: &TensorSpacePair<S>) -> Result<AltNormOperator<S>> {
    dyadic_levels(pair.x_t.mesh())?;
    AltNormOperator::new(&pair.mt_x, &pair.at_x, &pair.mx, &pair.ax)
}

/// `(T ⊗ I) blockdiag[(A_x + α_ψ M_x)⁻¹ A_x (A_x + α_ψ M_x)⁻¹] (Tᵀ ⊗ I)`.
#[derive(Debug, Clone)]
pub struct BlockDiagPrecond<S> {
    pub basis: TimeWaveletBasis<S>,
    blocks: Vec<SpdFactorization<S>>,
    ax: SparseMatrix<S>,
}

impl<S: Scalar> BlockDiagPrecond<S> {
    pub fn new(basis: TimeWaveletBasis<S>, ax: &SparseMatrix<S>, mx: &SparseMatrix<S>) -> Result<Self> {
        let blocks = basis
            .alphas
            .iter()
            .map(|&alpha| SpdFactorization::new(&ax.linear_combination(S::one(), mx, alpha)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { basis, blocks, ax: ax.clone() })
    }

    /// Preconditioner for the trial space of `pair`.
    pub fn for_pair(pair: &TensorSpacePair<S>) -> Result<Self> {
        Self::for_pair_with(pair, WaveletKind::default())
    }

    pub fn for_pair_with(pair: &TensorSpacePair<S>, kind: WaveletKind) -> Result<Self> {
        Self::new(build_time_wavelets_with(pair.x_t.mesh(), kind)?, &pair.ax, &pair.mx)
    }

    pub fn dim(&self) -> usize {
        self.basis.len() * self.ax.nrows()
    }

    pub fn apply(&self, h: &[S]) -> Vec<S> {
        let nx = self.ax.nrows();
        let t = &self.basis.transform;
        let in_wavelets = KroneckerOperator::new(t.transpose(), SparseMatrix::identity(nx)).apply(h).expect("trial vector");
        let blocks = map_rows(&in_wavelets, nx, |k, r| {
            let y = self.blocks[k].solve(r);
            self.blocks[k].solve(&self.ax.mul_vec(&y))
        });
        KroneckerOperator::new(t.clone(), SparseMatrix::identity(nx)).apply(&blocks).expect("wavelet vector")
    }
}

/// Free-function form of [`BlockDiagPrecond::apply`].
pub fn apply_precond<S: Scalar>(p: &BlockDiagPrecond<S>, h: &[S]) -> Vec<S> {
    p.apply(h)
}

/// Smallest eigenvalues of the differences in the sandwich between
/// `U = A + α² M A⁻¹ M` and `W = (A + αM) A⁻¹ (A + αM) = U + 2αM`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMargins<S> {
    /// `λ_min(W − U/2)`.
    pub lower: S,
    /// `λ_min(W − U)`.
    pub lower_tight: S,
    /// `λ_min(U − W)`: the upper bound `W ⪯ U`, negative whenever `α M ≠ 0`.
    pub upper_literal: S,
    /// `λ_min(2U − W)`.
    pub upper_corrected: S,
}

/// Evaluates all four margins by dense eigenvalue computations.
pub fn check_spectral_inequality<S: Scalar>(a: &DenseMatrix<S>, m: &DenseMatrix<S>, alpha: S) -> Result<SpectralMargins<S>> {
    if alpha < S::zero() {
        return Err(Error::InvalidParameter("alpha must be nonnegative".into()));
    }
    let n = a.nrows();
    let chol = a.cholesky()?;
    let ainv_m = DenseMatrix::from_columns(&(0..n).map(|j| chol.solve(&m.column(j))).collect::<Vec<_>>());
    let u = a.add(&m.matmul(&ainv_m).scaled(alpha * alpha));
    let shifted = a.add(&m.scaled(alpha));
    let ainv_shifted = DenseMatrix::from_columns(&(0..n).map(|j| chol.solve(&shifted.column(j))).collect::<Vec<_>>());
    let w = shifted.matmul(&ainv_shifted);
    let half = S::lit(0.5);
    Ok(SpectralMargins {
        lower: w.sub(&u.scaled(half)).min_eigenvalue()?,
        lower_tight: w.sub(&u).min_eigenvalue()?,
        upper_literal: u.sub(&w).min_eigenvalue()?,
        upper_corrected: u.scaled(S::lit(2.0)).sub(&w).min_eigenvalue()?,
    })
}

/// Condition number of the preconditioned operator at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaRow<S> {
    pub level: usize,
    pub dim: usize,
    pub kappa: S,
}

/// Spatial mesh used at each level of [`kappa_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialRefinement {
    /// The same uniform mesh with this many elements at every level.
    Fixed(usize),
    /// `2^level` elements, refined together with time.
    Matched,
}

impl Default for SpatialRefinement {
    fn default() -> Self {
        SpatialRefinement::Fixed(32)
    }
}

/// For `level = 1..=levels`: `2^level` elements in time, space per `spatial`,
/// `κ(P R)` estimated by Lanczos in the `R` inner product.
pub fn kappa_study<S: Scalar>(
    levels: usize,
    t_final: S,
    spatial: SpatialRefinement,
    kind: WaveletKind,
    opts: &EigenOptions,
) -> Result<Vec<KappaRow<S>>> {
    (1..=levels)
        .map(|level| {
            let nt = 1usize << level;
            let nx = match spatial {
                SpatialRefinement::Fixed(nx) => nx,
                SpatialRefinement::Matched => nt,
            };
            let pair = TensorSpacePair::uniform_default(t_final, nt, nx)?;
            let r = assemble_rx_operator(&pair)?;
            let p = BlockDiagPrecond::for_pair_with(&pair, kind)?;
            let kappa = condition_number_estimate(&|v: &[S]| r.apply(v), &|v: &[S]| p.apply(v), r.dim(), opts)?;
            Ok(KappaRow { level, dim: r.dim(), kappa })
        })
        .collect()
}
