//! Riesz maps of the discrete trial and test spaces, dual norms, the
//! mesh-dependent trial norm `‖·‖_{X,δ}`, and the embedding constant `C_J`.
//!
//! With `R_Y = M_t^Y ⊗ A_x` and `D = B_t ⊗ C_x`, the trial Riesz map is
//! `R_X = M_t^X ⊗ A_x + e_T e_Tᵀ ⊗ M_x + Dᵀ R_Y⁻¹ D`.

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, DenseMatrix, KroneckerOperator, KroneckerSolver, QuasiDefiniteFactorization, SparseMatrix, SpdFactorization};
use crate::scalar::Scalar;
use crate::spaces::{TensorSpacePair, TimeEnd};

/// How `R_X⁻¹` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxRoute {
    /// Simultaneous diagonalization of the spatial pencil `(A_x, M_x)`
    /// followed by one temporal solve per spatial mode. Needs `Y_x = X_x`.
    FastDiagonalization,
    /// Sparse LDLᵀ of the linear saddle matrix `[[R_Y, D], [Dᵀ, −(M_t ⊗ A_x + Γ)]]`.
    SaddleFactorization,
}

#[derive(Debug, Clone)]
enum RxSolver<S> {
    Fast {
        q: DenseMatrix<S>,
        modes: Vec<Cholesky<S>>,
    },
    Saddle {
        fact: QuasiDefiniteFactorization<S>,
    },
}

/// Factorized Riesz maps bound to one [`TensorSpacePair`].
#[derive(Debug, Clone)]
pub struct RieszContext<S> {
    pair: TensorSpacePair<S>,
    ry: KroneckerSolver<S>,
    ry_op: KroneckerOperator<S>,
    y_norm_on_x: KroneckerOperator<S>,
    rx: RxSolver<S>,
}

/// `Bᵀ M⁻¹ B` as a dense matrix.
fn normal_product<S: Scalar>(b: &SparseMatrix<S>, m: &SparseMatrix<S>) -> Result<DenseMatrix<S>> {
    let f = SpdFactorization::new(m)?;
    let n = b.ncols();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![S::zero(); n];
        e[j] = S::one();
        let bj = b.mul_vec(&e);
        cols.push(b.transpose_mul_vec(&f.solve(&bj)));
    }
    let mut k = DenseMatrix::from_columns(&cols);
    k.symmetrize();
    Ok(k)
}

/// Spatial modes `A_x q = λ M_x q` with `M_x`-orthonormal columns.
fn spatial_modes<S: Scalar>(pair: &TensorSpacePair<S>) -> Result<(Vec<S>, DenseMatrix<S>)> {
    DenseMatrix::generalized_symmetric_eigen(&pair.ax.to_dense(), &pair.mx.to_dense())
}

impl<S: Scalar> RieszContext<S> {
    /// Uses fast diagonalization when the spatial factors coincide.
    pub fn new(pair: &TensorSpacePair<S>) -> Result<Self> {
        let route = if pair.has_equal_spatial_factors() {
            RxRoute::FastDiagonalization
        } else {
            RxRoute::SaddleFactorization
        };
        Self::with_route(pair, route)
    }

    pub fn with_route(pair: &TensorSpacePair<S>, route: RxRoute) -> Result<Self> {
        let ry = KroneckerSolver::new(&pair.mt_y, &pair.ay_x)?;
        let ry_op = KroneckerOperator::new(pair.mt_y.clone(), pair.ay_x.clone());
        let y_norm_on_x = KroneckerOperator::new(pair.mt_x.clone(), pair.ax.clone());
        let rx = match route {
            RxRoute::FastDiagonalization => {
                if !pair.has_equal_spatial_factors() {
                    return Err(Error::UnsupportedBasis(
                        "fast diagonalization needs equal spatial trial and test factors".into(),
                    ));
                }
                let (lams, q) = spatial_modes(pair)?;
                let k = normal_product(&pair.bt, &pair.mt_y)?;
                let mt = pair.mt_x.to_dense();
                let nt = pair.nt_x();
                let mut modes = Vec::with_capacity(lams.len());
                for &lam in &lams {
                    let mut t = mt.scaled(lam).add(&k.scaled(S::one() / lam));
                    t[(nt - 1, nt - 1)] += S::one();
                    modes.push(t.cholesky()?);
                }
                RxSolver::Fast { q, modes }
            }
            RxRoute::SaddleFactorization => {
                let ryk = SparseMatrix::kron(&pair.mt_y, &pair.ay_x);
                let c = SparseMatrix::kron(&pair.mt_x, &pair.ax).linear_combination(S::one(), &pair.gamma_final, S::one())?;
                let block = SparseMatrix::block2x2(&ryk, &pair.d, &c.scaled(-S::one()))?;
                RxSolver::Saddle {
                    fact: QuasiDefiniteFactorization::new(&block)?,
                }
            }
        };
        Ok(Self {
            pair: pair.clone(),
            ry,
            ry_op,
            y_norm_on_x,
            rx,
        })
    }

    pub fn pair(&self) -> &TensorSpacePair<S> {
        &self.pair
    }

    pub fn route(&self) -> RxRoute {
        match self.rx {
            RxSolver::Fast { .. } => RxRoute::FastDiagonalization,
            RxSolver::Saddle { .. } => RxRoute::SaddleFactorization,
        }
    }

    /// `R_Y⁻¹ h`.
    pub fn riesz_y_solve(&self, h: &[S]) -> Vec<S> {
        self.ry.solve(h)
    }

    /// `R_Y v`.
    pub fn riesz_y_apply(&self, v: &[S]) -> Vec<S> {
        self.ry_op.apply(v).expect("test-space vector")
    }

    /// `R_X⁻¹ h`.
    pub fn riesz_x_solve(&self, h: &[S]) -> Vec<S> {
        let pair = &self.pair;
        assert_eq!(h.len(), pair.dim_x(), "trial dual dimension");
        match &self.rx {
            RxSolver::Fast { q, modes } => {
                let nt = pair.nt_x();
                let nx = pair.nx();
                let qt = q.transpose();
                let mut g = vec![S::zero(); nt * nx];
                for i in 0..nt {
                    let row = qt.mul_vec(&h[i * nx..(i + 1) * nx]);
                    g[i * nx..(i + 1) * nx].copy_from_slice(&row);
                }
                let mut col = vec![S::zero(); nt];
                for (j, chol) in modes.iter().enumerate() {
                    for i in 0..nt {
                        col[i] = g[i * nx + j];
                    }
                    let w = chol.solve(&col);
                    for i in 0..nt {
                        g[i * nx + j] = w[i];
                    }
                }
                let mut z = vec![S::zero(); nt * nx];
                for i in 0..nt {
                    let row = q.mul_vec(&g[i * nx..(i + 1) * nx]);
                    z[i * nx..(i + 1) * nx].copy_from_slice(&row);
                }
                z
            }
            RxSolver::Saddle { fact } => {
                let ny = pair.dim_y();
                let mut rhs = vec![S::zero(); ny + h.len()];
                for (r, &hi) in rhs[ny..].iter_mut().zip(h) {
                    *r = -hi;
                }
                fact.solve(&rhs)[ny..].to_vec()
            }
        }
    }

    /// `R_X z`, formed from its three terms.
    pub fn riesz_x_apply(&self, z: &[S]) -> Vec<S> {
        let mut out = self.y_norm_on_x.apply(z).expect("trial vector");
        crate::linalg::axpy(S::one(), &self.pair.gamma_final.mul_vec(z), &mut out);
        let dz = self.pair.d.mul_vec(z);
        let w = self.pair.d.transpose_mul_vec(&self.ry.solve(&dz));
        crate::linalg::axpy(S::one(), &w, &mut out);
        out
    }

    /// `‖h‖_{(Y^δ)'}`.
    pub fn dual_norm_y(&self, h: &[S]) -> S {
        dot(h, &self.riesz_y_solve(h)).max(S::zero()).sqrt()
    }

    /// `‖h‖_{(X^δ)'}`.
    pub fn dual_norm_x(&self, h: &[S]) -> S {
        dot(h, &self.riesz_x_solve(h)).max(S::zero()).sqrt()
    }

    /// `‖v‖_Y` for a test-space vector.
    pub fn norm_y(&self, v: &[S]) -> S {
        dot(v, &self.riesz_y_apply(v)).max(S::zero()).sqrt()
    }

    /// `‖z‖_Y` for a trial-space vector.
    pub fn norm_y_of_x(&self, z: &[S]) -> S {
        dot(z, &self.y_norm_on_x.apply(z).expect("trial vector")).max(S::zero()).sqrt()
    }

    /// Squares of `‖z‖_Y`, `‖d_t z‖_{(Y^δ)'}` and `‖z(T)‖_H`.
    pub fn norm_x_delta_parts(&self, z: &[S]) -> (S, S, S) {
        let y = dot(z, &self.y_norm_on_x.apply(z).expect("trial vector"));
        let dz = self.pair.d.mul_vec(z);
        let deriv = dot(&dz, &self.ry.solve(&dz));
        let zt = self.pair.trace_at_time(z, TimeEnd::Final);
        let fin = dot(&zt, &self.pair.mx.mul_vec(&zt));
        (y, deriv, fin)
    }

    /// `‖z‖_{X,δ}`.
    pub fn norm_x_delta(&self, z: &[S]) -> S {
        let (a, b, c) = self.norm_x_delta_parts(z);
        (a + b + c).max(S::zero()).sqrt()
    }

    /// `‖w‖_H` of a spatial coefficient vector in `X_x`.
    pub fn norm_h(&self, w: &[S]) -> S {
        dot(w, &self.pair.mx.mul_vec(w)).max(S::zero()).sqrt()
    }

    /// Both sides of `‖z‖²_{X,δ} = ‖(d_t + R_Y) z‖²_{(Y^δ)'} + ‖γ₀ z‖²_H`.
    pub fn check_infsup_identity(&self, z: &[S]) -> Result<(S, S)> {
        let ez = self.pair.embed_x_into_y(z)?;
        let lhs = self.norm_x_delta(z).powi(2);
        let mut h = self.pair.d.mul_vec(z);
        crate::linalg::axpy(S::one(), &self.riesz_y_apply(&ez), &mut h);
        let z0 = self.pair.trace_at_time(z, TimeEnd::Start);
        let rhs = self.dual_norm_y(&h).powi(2) + self.norm_h(&z0).powi(2);
        Ok((lhs, rhs))
    }

    /// Both sides of `(d_t w)(v) + (d_t v)(w) + ⟨γ₀ w, γ₀ v⟩ = ⟨γ_T w, γ_T v⟩`.
    pub fn check_trace_identity(&self, w: &[S], v: &[S]) -> Result<(S, S)> {
        let ev = self.pair.embed_x_into_y(v)?;
        let ew = self.pair.embed_x_into_y(w)?;
        let p = &self.pair;
        let (w0, v0) = (p.trace_at_time(w, TimeEnd::Start), p.trace_at_time(v, TimeEnd::Start));
        let (wt, vt) = (p.trace_at_time(w, TimeEnd::Final), p.trace_at_time(v, TimeEnd::Final));
        let lhs = dot(&p.d.mul_vec(w), &ev) + dot(&p.d.mul_vec(v), &ew) + dot(&w0, &p.mx.mul_vec(&v0));
        let rhs = dot(&wt, &p.mx.mul_vec(&vt));
        Ok((lhs, rhs))
    }

    /// Dense `R_X`, for oracles on small pairs.
    pub fn dense_rx(&self) -> DenseMatrix<S> {
        let n = self.pair.dim_x();
        let cols: Vec<Vec<S>> = (0..n)
            .map(|j| {
                let mut e = vec![S::zero(); n];
                e[j] = S::one();
                self.riesz_x_apply(&e)
            })
            .collect();
        let mut m = DenseMatrix::from_columns(&cols);
        m.symmetrize();
        m
    }
}

/// Free-function form of [`RieszContext::riesz_y_solve`].
pub fn riesz_y_solve<S: Scalar>(ctx: &RieszContext<S>, h: &[S]) -> Vec<S> {
    ctx.riesz_y_solve(h)
}

/// Free-function form of [`RieszContext::riesz_x_solve`].
pub fn riesz_x_solve<S: Scalar>(ctx: &RieszContext<S>, h: &[S]) -> Vec<S> {
    ctx.riesz_x_solve(h)
}

/// Free-function form of [`RieszContext::norm_x_delta`].
pub fn norm_x_delta<S: Scalar>(ctx: &RieszContext<S>, z: &[S]) -> S {
    ctx.norm_x_delta(z)
}

/// Free-function form of [`RieszContext::check_infsup_identity`].
pub fn check_infsup_identity<S: Scalar>(ctx: &RieszContext<S>, z: &[S]) -> Result<(S, S)> {
    ctx.check_infsup_identity(z)
}

/// Discrete embedding constant
/// `sup_{t∈{0,T}} sup_w ‖w(t)‖_H / sqrt(‖w‖²_Y + ‖d_t w‖²_{(Y^δ)'})`
/// on the trial space of `pair` (spatial factors must coincide).
///
/// In `M_x`-orthonormal spatial modes with eigenvalues `λ_j` the supremum is
/// `max_j e_tᵀ (λ_j M_t + K_t/λ_j)⁻¹ e_t` with `K_t = B_tᵀ (M_t^Y)⁻¹ B_t`.
pub fn estimate_c_j<S: Scalar>(pair: &TensorSpacePair<S>) -> Result<S> {
    if !pair.has_equal_spatial_factors() {
        return Err(Error::UnsupportedBasis("C_J estimate needs equal spatial factors".into()));
    }
    let (lams, _) = spatial_modes(pair)?;
    let k = normal_product(&pair.bt, &pair.mt_y)?;
    let mt = pair.mt_x.to_dense();
    let nt = pair.nt_x();
    let mut best = S::zero();
    for &lam in &lams {
        let chol = mt.scaled(lam).add(&k.scaled(S::one() / lam)).cholesky()?;
        for idx in [0, nt - 1] {
            let mut e = vec![S::zero(); nt];
            e[idx] = S::one();
            best = best.max(dot(&e, &chol.solve(&e)));
        }
    }
    Ok(best.sqrt())
}
