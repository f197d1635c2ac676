//! The discrete saddle-point operator
//! `N [λ; u] = [A_Y λ + D u; Dᵀ λ − (A_X + Γ) u]`, its Schur operator, data
//! assembly, the constant calculus, and a high-accuracy reference solver.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, QuasiDefiniteFactorization, SparseMatrix};
use crate::monotone::{newton_solve, zarantonello_solve, GalerkinOperator, MonotoneConstants, MuCoefficient, Side};
use crate::riesz::RieszContext;
use crate::scalar::Scalar;
use crate::spaces::{assemble_load, FeSpace1D, QuadratureRule, TensorSpacePair, TimeEnd};

/// All constants entering the stability and convergence estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsBundle<S> {
    pub l_a: S,
    pub m_a: S,
    pub l_n: S,
    pub l_s: S,
    pub m_s: S,
    pub l_ninv: S,
    pub l_beinv: S,
    pub c_1: S,
    /// Embedding constant, when estimated.
    pub c_j: Option<S>,
    /// Poincaré-Friedrichs constant of `(0, 1)`.
    pub c_pf: S,
}

/// Derives the bundle from `(L_A, m_A)`.
pub fn derive_constants<S: Scalar>(l_a: S, m_a: S) -> Result<ConstantsBundle<S>> {
    if !(m_a > S::zero()) || l_a < m_a || !l_a.is_finite() {
        return Err(Error::InvalidParameter(format!("need 0 < m_A <= L_A, got L_A = {l_a}, m_A = {m_a}")));
    }
    let one = S::one();
    let inv_m = one / m_a;
    let l_s = one.max(l_a).max(inv_m);
    let m_s = one.min(m_a).min(m_a / (l_a * l_a));
    let l_beinv = (one / m_s) * (one + inv_m);
    let l_ninv = inv_m + one.max(inv_m) * l_beinv;
    let c_1 = one + (one / m_s) * (one + ((one + l_a * l_a) * (one + inv_m * inv_m)).sqrt());
    Ok(ConstantsBundle {
        l_a,
        m_a,
        l_n: l_a + one,
        l_s,
        m_s,
        l_ninv,
        l_beinv,
        c_1,
        c_j: None,
        c_pf: one / S::PI(),
    })
}

impl<S: Scalar> ConstantsBundle<S> {
    pub fn from_mu(mu: &MuCoefficient<S>) -> Self {
        derive_constants(S::lit(3.0) * mu.big_m_mu(), mu.m_mu()).expect("validated bounds")
    }

    pub fn with_c_j(mut self, c_j: S) -> Self {
        self.c_j = Some(c_j);
        self
    }

    /// Constants of `A_Y`: `(L_A, m_A)`.
    pub fn a_constants(&self) -> MonotoneConstants<S> {
        MonotoneConstants::new(self.l_a, self.m_a).expect("valid bundle")
    }

    /// Constants of the Schur operator: `(L_S, m_S)`.
    pub fn s_constants(&self) -> MonotoneConstants<S> {
        MonotoneConstants::new(self.l_s, self.m_s).expect("valid bundle")
    }

    /// `sqrt(1 + L_A²)/m_A`.
    pub fn trace_weight(&self) -> S {
        (S::one() + self.l_a * self.l_a).sqrt() / self.m_a
    }

    /// Quasi-optimality factor `2 (1 + L_{N⁻¹} L_N / γ²)`.
    pub fn galerkin_bound(&self, gamma: S) -> S {
        S::lit(2.0) * (S::one() + self.l_ninv * self.l_n / (gamma * gamma))
    }

    /// Factor `2 C_1 sqrt(1 + L_A²)/m_A` bounding `‖λ^δ − u^δ‖_Y`.
    pub fn lambda_gap_bound(&self) -> S {
        S::lit(2.0) * self.c_1 * (S::one() + self.l_a * self.l_a).sqrt() / self.m_a
    }

    /// Lower efficiency constant `m_A / sqrt(1 + L_A² + m_A²)`.
    pub fn efficiency_lower(&self) -> S {
        self.m_a / (S::one() + self.l_a * self.l_a + self.m_a * self.m_a).sqrt()
    }

    /// Upper reliability constant for a reference-space parameter `rho`.
    pub fn reliability_upper(&self, rho: S) -> S {
        let a = self.l_a * rho;
        let b = self.l_a * rho * self.trace_weight() + S::one();
        self.l_beinv * (a * a + b * b).sqrt()
    }
}

/// Two-variable scalar field `(t, x) ↦ value`.
pub type Field2<S> = Arc<dyn Fn(S, S) -> S + Send + Sync>;
/// One-variable scalar field.
pub type Field1<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// Closed-form exact solution with its partial derivatives.
#[derive(Clone)]
pub struct ExactSolution<S> {
    pub u: Field2<S>,
    pub u_t: Field2<S>,
    pub u_x: Field2<S>,
}

/// Right-hand side `ℓ(v) = ∫∫ density·v + flux·v_x` and initial value `u₀`.
#[derive(Clone)]
pub struct ProblemData<S> {
    pub density: Option<Field2<S>>,
    pub flux: Option<Field2<S>>,
    pub u0: Option<Field1<S>>,
    pub exact: Option<ExactSolution<S>>,
    /// Gauss points per element and direction used for the data moments.
    pub quadrature_points: usize,
}

impl<S: Scalar> std::fmt::Debug for ProblemData<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("density", &self.density.is_some())
            .field("flux", &self.flux.is_some())
            .field("u0", &self.u0.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl<S: Scalar> ProblemData<S> {
    /// `ℓ = 0`, `u₀ = 0`.
    pub fn zero() -> Self {
        Self {
            density: None,
            flux: None,
            u0: None,
            exact: None,
            quadrature_points: 5,
        }
    }

    /// Heat equation with `u = sin(πx) e^{−π² t}`: `ℓ = 0`, `u₀ = sin(πx)`.
    pub fn heat() -> Self {
        let pi = S::PI();
        let exact = ExactSolution {
            u: Arc::new(move |t: S, x: S| (pi * x).sin() * (-pi * pi * t).exp()),
            u_t: Arc::new(move |t: S, x: S| -pi * pi * (pi * x).sin() * (-pi * pi * t).exp()),
            u_x: Arc::new(move |t: S, x: S| pi * (pi * x).cos() * (-pi * pi * t).exp()),
        };
        Self {
            density: None,
            flux: None,
            u0: Some(Arc::new(move |x: S| (pi * x).sin())),
            exact: Some(exact),
            quadrature_points: 5,
        }
    }

    /// Data manufactured from `exact` for the operator with coefficient `mu`:
    /// `ℓ(v) = ∫∫ u_t v + μ(t, x, u_x²) u_x v_x`, `u₀ = u(0, ·)`.
    pub fn manufactured(exact: ExactSolution<S>, mu: MuCoefficient<S>) -> Self {
        let ux = exact.u_x.clone();
        let u = exact.u.clone();
        Self {
            density: Some(exact.u_t.clone()),
            flux: Some(Arc::new(move |t: S, x: S| {
                let g = ux(t, x);
                mu.mu(t, x, g * g) * g
            })),
            u0: Some(Arc::new(move |x: S| u(S::zero(), x))),
            exact: Some(exact),
            quadrature_points: 5,
        }
    }

    /// `u = sin(πx) e^{−t}` with manufactured forcing for `mu`.
    pub fn decay(mu: MuCoefficient<S>) -> Self {
        let pi = S::PI();
        let exact = ExactSolution {
            u: Arc::new(move |t: S, x: S| (pi * x).sin() * (-t).exp()),
            u_t: Arc::new(move |t: S, x: S| -(pi * x).sin() * (-t).exp()),
            u_x: Arc::new(move |t: S, x: S| pi * (pi * x).cos() * (-t).exp()),
        };
        Self::manufactured(exact, mu)
    }

    /// Moments `ℓ(φ_i ⊗ ψ_j)` on the tensor space `time ⊗ space`.
    pub fn ell_moments(&self, time: &FeSpace1D<S>, space: &FeSpace1D<S>) -> Result<Vec<S>> {
        let nx = space.ndofs();
        let mut out = vec![S::zero(); time.ndofs() * nx];
        if self.density.is_none() && self.flux.is_none() {
            return Ok(out);
        }
        let q = QuadratureRule::<S>::gauss(self.quadrature_points)?;
        for et in 0..time.num_elements() {
            let (ta, tb) = time.mesh().element(et);
            let ht = tb - ta;
            let tdofs = time.element_dofs(et);
            for ex in 0..space.num_elements() {
                let (xa, xb) = space.mesh().element(ex);
                let hx = xb - xa;
                let xdofs = space.element_dofs(ex);
                let dpsi = space.shape_derivative(hx);
                for (&pt, &wt) in q.points.iter().zip(&q.weights) {
                    let t = ta + ht * pt;
                    let phi = time.shape(pt);
                    for (&px, &wx) in q.points.iter().zip(&q.weights) {
                        let x = xa + hx * px;
                        let w = wt * ht * wx * hx;
                        let psi = space.shape(px);
                        let dens = self.density.as_ref().map_or(S::zero(), |f| f(t, x)) * w;
                        let flux = self.flux.as_ref().map_or(S::zero(), |f| f(t, x)) * w;
                        for (a, td) in tdofs.iter().enumerate() {
                            let Some(i) = td else { continue };
                            for (b, xd) in xdofs.iter().enumerate() {
                                let Some(j) = xd else { continue };
                                out[i * nx + j] += phi[a] * (dens * psi[b] + flux * dpsi[b]);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Moments `⟨u₀, ψ_j⟩_H` on `space`.
    pub fn u0_moments(&self, space: &FeSpace1D<S>) -> Result<Vec<S>> {
        match &self.u0 {
            Some(u0) => assemble_load(space, |x| u0(x), self.quadrature_points),
            None => Ok(vec![S::zero(); space.ndofs()]),
        }
    }

    /// Spatial coefficients of the `H`-orthogonal projection of `u₀` onto `X_x`.
    pub fn u0_projection(&self, pair: &TensorSpacePair<S>) -> Result<Vec<S>> {
        let m = self.u0_moments(&pair.x_x)?;
        Ok(crate::linalg::SpdFactorization::new(&pair.mx)?.solve(&m))
    }

    /// `‖u₀ − w‖_H` for `w` given by `X_x` coefficients, by quadrature of the closed form.
    pub fn initial_defect(&self, space: &FeSpace1D<S>, w: &[S]) -> Result<S> {
        let q = QuadratureRule::<S>::gauss(self.quadrature_points)?;
        let mut acc = S::zero();
        for e in 0..space.num_elements() {
            let (a, b) = space.mesh().element(e);
            acc += q.integrate(a, b, |x| {
                let u0 = self.u0.as_ref().map_or(S::zero(), |f| f(x));
                let d = u0 - space.eval_on(w, e, x).0;
                d * d
            });
        }
        Ok(acc.sqrt())
    }
}

/// Discrete right-hand side `(f, g)` with `f = ℓ|_Y` and `g = −ℓ|_X − γ₀'u₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs<S> {
    pub f: Vec<S>,
    pub g: Vec<S>,
}

impl<S: Scalar> Rhs<S> {
    pub fn zeros(pair: &TensorSpacePair<S>) -> Self {
        Self {
            f: vec![S::zero(); pair.dim_y()],
            g: vec![S::zero(); pair.dim_x()],
        }
    }
}

/// Assembles `(f, g)` for `data` on `pair`.
pub fn assemble_rhs<S: Scalar>(data: &ProblemData<S>, pair: &TensorSpacePair<S>) -> Result<Rhs<S>> {
    let f = data.ell_moments(&pair.y_t, &pair.y_x)?;
    let ell_x = data.ell_moments(&pair.x_t, &pair.x_x)?;
    let u0m = data.u0_moments(&pair.x_x)?;
    let lift = pair.trace_adjoint(&u0m, TimeEnd::Start);
    let g = ell_x.iter().zip(&lift).map(|(&a, &b)| -(a + b)).collect();
    Ok(Rhs { f, g })
}

/// Coefficients `(λ, u)` of the pair solved by the saddle system.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState<S> {
    pub lambda: Vec<S>,
    pub u: Vec<S>,
}

impl<S: Scalar> SaddleState<S> {
    pub fn zeros(pair: &TensorSpacePair<S>) -> Self {
        Self {
            lambda: vec![S::zero(); pair.dim_y()],
            u: vec![S::zero(); pair.dim_x()],
        }
    }
}

/// How `A_Y⁻¹` is evaluated inside the Schur operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolve<S> {
    /// Zarantonello iteration to a step norm of `tol`.
    Zarantonello { tol: S, max_iter: usize },
    /// Damped Newton to a Euclidean residual of `tol`.
    Newton { tol: S },
}

/// The discrete saddle operator on a tensor pair with coefficient `μ`.
#[derive(Debug, Clone)]
pub struct SaddleSystem<S> {
    pub pair: TensorSpacePair<S>,
    pub op_y: GalerkinOperator<S>,
    pub op_x: GalerkinOperator<S>,
    pub bundle: ConstantsBundle<S>,
}

/// Options of [`SaddleSystem::solve_reference`].
#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Schur-Zarantonello steps tried when Newton fails.
    pub fallback_iterations: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_newton: 60,
            fallback_iterations: 100_000,
        }
    }
}

impl<S: Scalar> SaddleSystem<S> {
    pub fn new(pair: &TensorSpacePair<S>, mu: &MuCoefficient<S>) -> Result<Self> {
        Ok(Self {
            pair: pair.clone(),
            op_y: GalerkinOperator::for_pair(pair, Side::Test, mu.clone())?,
            op_x: GalerkinOperator::for_pair(pair, Side::Trial, mu.clone())?,
            bundle: ConstantsBundle::from_mu(mu),
        })
    }

    /// `(A_X + Γ) u`.
    pub fn apply_trial_part(&self, u: &[S]) -> Vec<S> {
        let mut out = self.op_x.apply(u);
        axpy(S::one(), &self.pair.gamma_final.mul_vec(u), &mut out);
        out
    }

    /// `N [λ; u]`.
    pub fn apply_n(&self, state: &SaddleState<S>) -> (Vec<S>, Vec<S>) {
        let mut first = self.op_y.apply(&state.lambda);
        axpy(S::one(), &self.pair.d.mul_vec(&state.u), &mut first);
        let mut second = self.pair.d.transpose_mul_vec(&state.lambda);
        axpy(-S::one(), &self.apply_trial_part(&state.u), &mut second);
        (first, second)
    }

    /// `[f; g] − N [λ; u]`.
    pub fn residual(&self, state: &SaddleState<S>, rhs: &Rhs<S>) -> (Vec<S>, Vec<S>) {
        let (a, b) = self.apply_n(state);
        (crate::linalg::sub(&rhs.f, &a), crate::linalg::sub(&rhs.g, &b))
    }

    /// `‖r_Y‖_{(Y^δ)'} + ‖r_X‖_{(X^δ)'}` of the residual.
    pub fn residual_norm(&self, state: &SaddleState<S>, rhs: &Rhs<S>, ctx: &RieszContext<S>) -> S {
        let (ry, rx) = self.residual(state, rhs);
        ctx.dual_norm_y(&ry) + ctx.dual_norm_x(&rx)
    }

    /// `λ = A_Y⁻¹(f − D u)`, started from `start`.
    pub fn solve_lambda(&self, u: &[S], rhs: &Rhs<S>, ctx: &RieszContext<S>, inner: InnerSolve<S>, start: &[S]) -> Result<Vec<S>> {
        let mut b = rhs.f.clone();
        axpy(-S::one(), &self.pair.d.mul_vec(u), &mut b);
        match inner {
            InnerSolve::Zarantonello { tol, max_iter } => {
                let c = self.bundle.a_constants();
                let out = zarantonello_solve(&|x| self.op_y.apply(x), &|r| ctx.riesz_y_solve(r), &b, start, &c, tol, max_iter);
                if out.converged {
                    Ok(out.x)
                } else {
                    Err(Error::NotConverged {
                        iterations: out.iterations,
                        last: out.final_step_norm.as_f64(),
                    })
                }
            }
            InnerSolve::Newton { tol } => newton_solve(&self.op_y, &b, start, tol, 100),
        }
    }

    /// Schur operator `S z = (A_X + Γ) z + g − Dᵀ A_Y⁻¹(f − D z)`.
    pub fn apply_s(&self, z: &[S], rhs: &Rhs<S>, ctx: &RieszContext<S>, inner: InnerSolve<S>) -> Result<Vec<S>> {
        let start = vec![S::zero(); self.pair.dim_y()];
        let lambda = self.solve_lambda(z, rhs, ctx, inner, &start)?;
        let mut out = self.apply_trial_part(z);
        axpy(S::one(), &rhs.g, &mut out);
        axpy(-S::one(), &self.pair.d.transpose_mul_vec(&lambda), &mut out);
        Ok(out)
    }

    /// Newton step matrix `[[J_Y, D], [Dᵀ, −(J_X + Γ)]]`.
    fn newton_matrix(&self, state: &SaddleState<S>) -> Result<SparseMatrix<S>> {
        let jy = self.op_y.jacobian(&state.lambda);
        let jx = self.op_x.jacobian(&state.u).linear_combination(S::one(), &self.pair.gamma_final, S::one())?;
        SparseMatrix::block2x2(&jy, &self.pair.d, &jx.scaled(-S::one()))
    }

    /// High-accuracy discrete solution: damped Newton on the full system with
    /// step halving on the residual dual norm; Zarantonello iteration on the
    /// Schur operator with Newton inner solves if Newton fails.
    pub fn solve_reference(&self, rhs: &Rhs<S>, ctx: &RieszContext<S>, opts: &ReferenceOptions) -> Result<SaddleState<S>> {
        if opts.tol < 1e-12 {
            return Err(Error::InvalidParameter("reference tolerance must be at least 1e-12".into()));
        }
        let tol = S::lit(opts.tol);
        let ny = self.pair.dim_y();
        let mut state = SaddleState::zeros(&self.pair);
        let mut res = self.residual_norm(&state, rhs, ctx);
        let mut newton_ok = false;
        for _ in 0..opts.max_newton {
            if res <= tol {
                return Ok(state);
            }
            let (ry, rx) = self.residual(&state, rhs);
            let fact = match QuasiDefiniteFactorization::new(&self.newton_matrix(&state)?) {
                Ok(f) => f,
                Err(_) => break,
            };
            let mut r = ry;
            r.extend(rx);
            let delta = fact.solve(&r);
            let mut alpha = S::one();
            let mut improved = false;
            for _ in 0..30 {
                let trial = SaddleState {
                    lambda: state.lambda.iter().zip(&delta[..ny]).map(|(&a, &d)| a + alpha * d).collect(),
                    u: state.u.iter().zip(&delta[ny..]).map(|(&a, &d)| a + alpha * d).collect(),
                };
                let tres = self.residual_norm(&trial, rhs, ctx);
                if tres < res {
                    state = trial;
                    res = tres;
                    improved = true;
                    break;
                }
                alpha *= S::lit(0.5);
            }
            if !improved {
                newton_ok = res <= tol;
                break;
            }
        }
        if res <= tol || newton_ok {
            return Ok(state);
        }
        self.schur_fallback(rhs, ctx, state, tol, opts.fallback_iterations)
    }

    fn schur_fallback(&self, rhs: &Rhs<S>, ctx: &RieszContext<S>, start: SaddleState<S>, tol: S, iters: usize) -> Result<SaddleState<S>> {
        let inner = InnerSolve::Newton { tol: S::lit(1e-13) };
        let zeros = vec![S::zero(); self.pair.dim_x()];
        let c = self.bundle.s_constants();
        let failed = std::cell::Cell::new(false);
        let apply = |z: &[S]| match self.apply_s(z, rhs, ctx, inner) {
            Ok(v) => v,
            Err(_) => {
                failed.set(true);
                vec![S::zero(); z.len()]
            }
        };
        let out = zarantonello_solve(&apply, &|r| ctx.riesz_x_solve(r), &zeros, &start.u, &c, tol * S::lit(1e-2), iters);
        if failed.get() {
            return Err(Error::NotConverged {
                iterations: out.iterations,
                last: f64::NAN,
            });
        }
        let lambda = self.solve_lambda(&out.x, rhs, ctx, inner, &start.lambda)?;
        let state = SaddleState { lambda, u: out.x };
        let res = self.residual_norm(&state, rhs, ctx);
        if res <= tol {
            Ok(state)
        } else {
            Err(Error::NotConverged {
                iterations: out.iterations,
                last: res.as_f64(),
            })
        }
    }
}

/// Free-function form of [`SaddleSystem::apply_n`].
pub fn apply_n<S: Scalar>(sys: &SaddleSystem<S>, state: &SaddleState<S>) -> (Vec<S>, Vec<S>) {
    sys.apply_n(state)
}

/// Free-function form of [`SaddleSystem::apply_s`] with Zarantonello inner
/// solves to `inner_tol`.
pub fn apply_s<S: Scalar>(sys: &SaddleSystem<S>, z: &[S], rhs: &Rhs<S>, ctx: &RieszContext<S>, inner_tol: S) -> Result<Vec<S>> {
    if !(inner_tol > S::zero()) {
        return Err(Error::InvalidParameter("inner tolerance must be positive".into()));
    }
    sys.apply_s(z, rhs, ctx, InnerSolve::Zarantonello { tol: inner_tol, max_iter: 1_000_000 })
}

/// Free-function form of [`SaddleSystem::solve_reference`].
pub fn solve_reference<S: Scalar>(sys: &SaddleSystem<S>, rhs: &Rhs<S>, ctx: &RieszContext<S>, tol: f64) -> Result<SaddleState<S>> {
    sys.solve_reference(rhs, ctx, &ReferenceOptions { tol, ..ReferenceOptions::default() })
}

/// `(Dw)(v)`-type bilinear pairing helper: `vᵀ D w`.
pub fn pairing<S: Scalar>(d: &SparseMatrix<S>, w: &[S], v: &[S]) -> S {
    dot(v, &d.mul_vec(w))
}
