//! Inf-sup diagnostics, quasi-optimality measurements against a finer
//! reference solution, the a posteriori quasi-optimality test with its
//! test-space enrichment loop, and efficiency/reliability ratios.
//!
//! Continuous quantities are replaced by surrogates on spaces a fixed number
//! of uniform refinements finer. For `v` in the fine trial space the `X`-norm
//! surrogate is the mesh-dependent norm of the fine pair,
//! `‖v‖²_X ≈ ‖v‖²_Y + ‖d_t v‖²_{(Y_f)'} + ‖v(T)‖²_H`.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sub, DenseMatrix, KroneckerOperator, KroneckerSolver, SparseMatrix, SpdFactorization};
use crate::monotone::{newton_solve, GalerkinOperator, MuCoefficient, Side};
use crate::riesz::RieszContext;
use crate::scalar::Scalar;
use crate::spaces::{assemble_bilinear, interpolation_matrix, tensor_interpolation, BasisFamily, BasisSpec, Boundary, FeSpace1D, TensorSpacePair, TimeEnd};
use crate::system::{assemble_rhs, ConstantsBundle, ProblemData, ReferenceOptions, SaddleState, SaddleSystem};

/// Refinements between a discretization and its reference surrogate.
pub const DEFAULT_REFERENCE_REFINEMENTS: usize = 2;

/// Inf-sup constants of a tensor pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupReport<S> {
    pub gamma_t: S,
    pub gamma_x: S,
    /// `gamma_t · gamma_x`.
    pub gamma_lower: S,
    pub gamma_direct: Option<S>,
}

fn require_cg1_time<S: Scalar>(x_t: &FeSpace1D<S>) -> Result<()> {
    let spec = x_t.spec();
    if spec.family != BasisFamily::ContinuousP1 || spec.boundary != Boundary::Free {
        return Err(Error::UnsupportedBasis("temporal trial space must be continuous P1 without constraints".into()));
    }
    Ok(())
}

/// Smallest generalized eigenvalue of a dense symmetric pencil.
fn min_pencil_value<S: Scalar>(a: &DenseMatrix<S>, b: &DenseMatrix<S>) -> Result<S> {
    let (vals, _) = DenseMatrix::generalized_symmetric_eigen(a, b)?;
    Ok(vals[0])
}

/// Dense `Bᵀ F⁻¹ B` for a sparse `B` and a solve `F⁻¹`.
fn normal_generic<S: Scalar>(b: &SparseMatrix<S>, solve: impl Fn(&[S]) -> Vec<S>) -> DenseMatrix<S> {
    let n = b.ncols();
    let cols: Vec<Vec<S>> = (0..n)
        .map(|j| {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            b.transpose_mul_vec(&solve(&b.mul_vec(&e)))
        })
        .collect();
    let mut m = DenseMatrix::from_columns(&cols);
    m.symmetrize();
    m
}

/// Temporal inf-sup constant: over derivatives `ż` of the trial functions
/// (the piecewise constants on the trial mesh), the smallest ratio
/// `sup_v ∫ż v / ‖v‖ / ‖ż‖`, from the pencil `(CᵀM_Y⁻¹C, M_0)`.
pub fn gamma_t<S: Scalar>(x_t: &FeSpace1D<S>, y_t: &FeSpace1D<S>) -> Result<S> {
    require_cg1_time(x_t)?;
    let p0 = FeSpace1D::new(x_t.mesh().clone(), BasisSpec::DG0)?;
    let c = assemble_bilinear(y_t, &p0, false, false)?;
    let my = SpdFactorization::new(&assemble_bilinear(y_t, y_t, false, false)?)?;
    let k = normal_generic(&c, |r| my.solve(r));
    let m0 = assemble_bilinear(&p0, &p0, false, false)?.to_dense();
    Ok(min_pencil_value(&k, &m0)?.max(S::zero()).sqrt())
}

/// Spatial inf-sup constant for `Y_x = X_x`:
/// `inf_z ‖z‖_{(X_x)'} / ‖z‖_{V'}` with `V'` measured on a space
/// `refinements` times finer. Equals `1/‖P‖_{V→V}` for the `H`-orthogonal
/// projector `P` onto `X_x`, with `V` replaced by the finer space.
pub fn gamma_x<S: Scalar>(x_x: &FeSpace1D<S>, y_x: &FeSpace1D<S>, refinements: usize) -> Result<S> {
    if x_x.mesh().points() != y_x.mesh().points() || x_x.spec() != y_x.spec() {
        return Err(Error::UnsupportedBasis("spatial inf-sup constant needs Y_x = X_x".into()));
    }
    let fine = FeSpace1D::new(x_x.mesh().refined(refinements), x_x.spec())?;
    let mc = assemble_bilinear(x_x, x_x, false, false)?;
    let ac = SpdFactorization::new(&assemble_bilinear(x_x, x_x, true, true)?)?;
    let af = SpdFactorization::new(&assemble_bilinear(&fine, &fine, true, true)?)?;
    let mixed = assemble_bilinear(&fine, x_x, false, false)?;
    let num = normal_generic(&mc, |r| ac.solve(r));
    let den = normal_generic(&mixed, |r| af.solve(r));
    Ok(min_pencil_value(&num, &den)?.max(S::zero()).sqrt())
}

/// Inf-sup constant of the full pair, `inf_z ‖d_t z‖_{(Y^δ)'} / ‖d_t z‖_{Y'}`
/// over the derivative image (piecewise constants in time ⊗ `X_x`), with `Y'`
/// measured on the test space refined `refinements` times in time and space.
/// Computed as one dense pencil on the full tensor space.
pub fn gamma_direct<S: Scalar>(pair: &TensorSpacePair<S>, refinements: usize) -> Result<S> {
    require_cg1_time(&pair.x_t)?;
    let p0 = FeSpace1D::new(pair.x_t.mesh().clone(), BasisSpec::DG0)?;
    let image = |y_t: &FeSpace1D<S>, y_x: &FeSpace1D<S>| -> Result<SparseMatrix<S>> {
        let c_t = assemble_bilinear(y_t, &p0, false, false)?;
        let c_x = assemble_bilinear(y_x, &pair.x_x, false, false)?;
        Ok(SparseMatrix::kron(&c_t, &c_x))
    };
    let ry = KroneckerSolver::new(&pair.mt_y, &pair.ay_x)?;
    let num = normal_generic(&image(&pair.y_t, &pair.y_x)?, |r| ry.solve(r));
    let yt_f = FeSpace1D::new(pair.y_t.mesh().refined(refinements), pair.y_t.spec())?;
    let yx_f = FeSpace1D::new(pair.y_x.mesh().refined(refinements), pair.y_x.spec())?;
    let ry_f = KroneckerSolver::new(&assemble_bilinear(&yt_f, &yt_f, false, false)?, &assemble_bilinear(&yx_f, &yx_f, true, true)?)?;
    let den = normal_generic(&image(&yt_f, &yx_f)?, |r| ry_f.solve(r));
    Ok(min_pencil_value(&num, &den)?.max(S::zero()).sqrt())
}

/// All inf-sup diagnostics of `pair`; the direct value only when
/// `with_direct` is set (it costs a dense eigenproblem of size `dim X`).
pub fn infsup_report<S: Scalar>(pair: &TensorSpacePair<S>, refinements: usize, with_direct: bool) -> Result<InfSupReport<S>> {
    let gt = gamma_t(&pair.x_t, &pair.y_t)?;
    let gx = gamma_x(&pair.x_x, &pair.x_x, refinements)?;
    let gamma_direct = if with_direct { Some(gamma_direct(pair, refinements)?) } else { None };
    Ok(InfSupReport {
        gamma_t: gt,
        gamma_x: gx,
        gamma_lower: gt * gx,
        gamma_direct,
    })
}

/// `‖v‖_Y` for a test-space vector of `pair`.
pub fn y_norm<S: Scalar>(pair: &TensorSpacePair<S>, v: &[S]) -> S {
    let op = KroneckerOperator::new(pair.mt_y.clone(), pair.ay_x.clone());
    dot(v, &op.apply(v).expect("test vector")).max(S::zero()).sqrt()
}

/// `‖λ − u‖_Y` with `u` embedded into the test space.
pub fn lambda_gap<S: Scalar>(pair: &TensorSpacePair<S>, state: &SaddleState<S>) -> Result<S> {
    let eu = pair.embed_x_into_y(&state.u)?;
    Ok(y_norm(pair, &sub(&state.lambda, &eu)))
}

/// `‖u₀ − u(0)‖_H` for the trial coefficients `u`.
pub fn initial_defect<S: Scalar>(pair: &TensorSpacePair<S>, data: &ProblemData<S>, u: &[S]) -> Result<S> {
    data.initial_defect(&pair.x_x, &pair.trace_at_time(u, TimeEnd::Start))
}

/// Discrete solution on a finer pair, standing in for the exact solution.
#[derive(Debug, Clone)]
pub struct FineReference<S> {
    pub pair: TensorSpacePair<S>,
    pub ctx: RieszContext<S>,
    pub state: SaddleState<S>,
    pub refinements: usize,
}

impl<S: Scalar> FineReference<S> {
    /// Solves the problem on `coarse` refined `refinements` times in all directions.
    pub fn new(coarse: &TensorSpacePair<S>, data: &ProblemData<S>, mu: &MuCoefficient<S>, refinements: usize, tol: f64) -> Result<Self> {
        let pair = coarse.refined(refinements)?;
        let ctx = RieszContext::new(&pair)?;
        let sys = SaddleSystem::new(&pair, mu)?;
        let rhs = assemble_rhs(data, &pair)?;
        let state = sys.solve_reference(&rhs, &ctx, &ReferenceOptions { tol, ..ReferenceOptions::default() })?;
        Ok(Self { pair, ctx, state, refinements })
    }

    /// Prolongation of trial coefficients of `coarse` into the fine trial space.
    pub fn prolongation(&self, coarse: &TensorSpacePair<S>) -> Result<SparseMatrix<S>> {
        tensor_interpolation(&coarse.x_t, &coarse.x_x, &self.pair.x_t, &self.pair.x_x)
    }

    /// Gram matrix of the `X`-norm surrogate applied to `v`.
    pub fn x_gram_apply(&self, v: &[S]) -> Vec<S> {
        self.ctx.riesz_x_apply(v)
    }

    /// `X`-norm surrogate of a fine trial vector.
    pub fn x_norm(&self, v: &[S]) -> S {
        self.ctx.norm_x_delta(v)
    }

    /// `‖u_ref − u‖_X` for trial coefficients `u` of `coarse`.
    pub fn error_x(&self, coarse: &TensorSpacePair<S>, u: &[S]) -> Result<S> {
        let pu = self.prolongation(coarse)?.mul_vec(u);
        Ok(self.x_norm(&sub(&self.state.u, &pu)))
    }

    /// `inf_{ū ∈ X^δ} ‖u_ref − ū‖_X` over the trial space of `coarse`,
    /// through the dense Gram matrix of that space.
    pub fn best_approximation_error(&self, coarse: &TensorSpacePair<S>) -> Result<S> {
        let p = self.prolongation(coarse)?;
        let n = p.ncols();
        let gp: Vec<Vec<S>> = (0..n)
            .map(|j| {
                let mut e = vec![S::zero(); n];
                e[j] = S::one();
                self.x_gram_apply(&p.mul_vec(&e))
            })
            .collect();
        let cols: Vec<Vec<S>> = gp.iter().map(|c| p.transpose_mul_vec(c)).collect();
        let mut g = DenseMatrix::from_columns(&cols);
        g.symmetrize();
        let b = p.transpose_mul_vec(&self.x_gram_apply(&self.state.u));
        let c = g.cholesky()?.solve(&b);
        Ok(self.x_norm(&sub(&self.state.u, &p.mul_vec(&c))))
    }

    /// Surrogate of `‖u − u^δ‖_{X,δ}`: the `Y` and final-trace parts on the
    /// fine pair, the derivative measured in the dual of the test space of `coarse`.
    pub fn error_x_delta(&self, coarse: &TensorSpacePair<S>, coarse_ctx: &RieszContext<S>, u: &[S]) -> Result<S> {
        let v = sub(&self.state.u, &self.prolongation(coarse)?.mul_vec(u));
        let (y2, _, fin2) = self.ctx.norm_x_delta_parts(&v);
        let iy = tensor_interpolation(&coarse.y_t, &coarse.y_x, &self.pair.y_t, &self.pair.y_x)?;
        let moments = iy.transpose_mul_vec(&self.pair.d.mul_vec(&v));
        let d2 = coarse_ctx.dual_norm_y(&moments).powi(2);
        Ok((y2 + d2 + fin2).max(S::zero()).sqrt())
    }
}

/// Measured quasi-optimality ratio and its theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiOptReport<S> {
    pub error: S,
    pub best_error: S,
    pub ratio: S,
    pub bound: S,
}

/// `‖u_ref − u^δ‖_X / inf_ū ‖u_ref − ū‖_X` against `2(1 + L_{N⁻¹} L_N / γ²)`.
pub fn quasi_opt_ratio<S: Scalar>(reference: &FineReference<S>, coarse: &TensorSpacePair<S>, state: &SaddleState<S>, bundle: &ConstantsBundle<S>, gamma: S) -> Result<QuasiOptReport<S>> {
    let best_error = reference.best_approximation_error(coarse)?;
    if best_error < S::lit(1e-12) {
        return Err(Error::Undefined("reference solution lies in the trial space".into()));
    }
    let error = reference.error_x(coarse, &state.u)?;
    Ok(QuasiOptReport {
        error,
        best_error,
        ratio: error / best_error,
        bound: bundle.galerkin_bound(gamma),
    })
}

/// Quantities of the a priori estimates in the mesh-dependent norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport<S> {
    /// `‖u − u^δ‖_{X,δ}`.
    pub error_x_delta: S,
    /// `‖u₀ − u^δ(0)‖_H`.
    pub initial_defect: S,
    /// `‖λ^δ − u^δ‖_{Y^δ}`.
    pub lambda_gap: S,
    pub best_error: S,
    /// `max(error_x_delta, initial_defect)`.
    pub error_lhs: S,
    /// `C_1 · best_error`.
    pub error_bound: S,
    /// `lambda_gap + sqrt(1 + L_A²)/m_A · initial_defect`.
    pub gap_lhs: S,
    /// `2 C_1 sqrt(1 + L_A²)/m_A · best_error`.
    pub gap_bound: S,
}

impl<S: Scalar> AprioriReport<S> {
    /// Both inequalities with the bounds multiplied by `slack`.
    pub fn holds(&self, slack: S) -> bool {
        self.error_lhs <= slack * self.error_bound && self.gap_lhs <= slack * self.gap_bound
    }
}

/// Evaluates both a priori estimates with the fine reference as surrogate for `u`.
pub fn thm61_check<S: Scalar>(
    reference: &FineReference<S>,
    coarse_ctx: &RieszContext<S>,
    data: &ProblemData<S>,
    state: &SaddleState<S>,
    bundle: &ConstantsBundle<S>,
) -> Result<AprioriReport<S>> {
    let coarse = coarse_ctx.pair();
    if !coarse.x_in_y {
        return Err(Error::NotNested);
    }
    let best_error = reference.best_approximation_error(coarse)?;
    if best_error < S::lit(1e-12) {
        return Err(Error::Undefined("reference solution lies in the trial space".into()));
    }
    let error_x_delta = reference.error_x_delta(coarse, coarse_ctx, &state.u)?;
    let defect = initial_defect(coarse, data, &state.u)?;
    let gap = lambda_gap(coarse, state)?;
    let w = bundle.trace_weight();
    Ok(AprioriReport {
        error_x_delta,
        initial_defect: defect,
        lambda_gap: gap,
        best_error,
        error_lhs: error_x_delta.max(defect),
        error_bound: bundle.c_1 * best_error,
        gap_lhs: gap + w * defect,
        gap_bound: bundle.lambda_gap_bound() * best_error,
    })
}

/// Outcome of the a posteriori quasi-optimality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PjotrReport<S> {
    pub rho: S,
    /// `‖λ_δ̂ − λ^δ‖_Y` with `λ_δ̂` solved on the enriched test space.
    pub lhs: S,
    /// `ϱ (‖λ^δ − u^δ‖_{Y^δ} + sqrt(1 + L_A²)/m_A ‖u₀ − u^δ(0)‖_H)`.
    pub rhs: S,
    pub satisfied: bool,
    /// Right-hand side vanishes: the test cannot certify anything.
    pub degenerate: bool,
}

/// Tests `‖λ_δ − λ^δ‖_Y ≤ ϱ(‖λ^δ − u^δ‖_{Y^δ} + sqrt(1+L_A²)/m_A ‖u₀ − γ₀u^δ‖_H)`
/// where `λ_δ = A⁻¹(ℓ − d_t u^δ)` is replaced by its Galerkin approximation
/// on the test space of `enriched`, which must share the trial space of `pair`.
pub fn check_pjotr<S: Scalar>(
    pair: &TensorSpacePair<S>,
    state: &SaddleState<S>,
    data: &ProblemData<S>,
    mu: &MuCoefficient<S>,
    enriched: &TensorSpacePair<S>,
    rho: S,
) -> Result<PjotrReport<S>> {
    if !pair.x_in_y {
        return Err(Error::NotNested);
    }
    if enriched.x_t.mesh().points() != pair.x_t.mesh().points() || enriched.x_x.mesh().points() != pair.x_x.mesh().points() {
        return Err(Error::InvalidParameter("enriched pair must share the trial space".into()));
    }
    if enriched.dim_y() <= pair.dim_y() {
        return Err(Error::InvalidParameter("enriched test space must be strictly larger".into()));
    }
    let op = GalerkinOperator::for_pair(enriched, Side::Test, mu.clone())?;
    let mut b = data.ell_moments(&enriched.y_t, &enriched.y_x)?;
    axpy(-S::one(), &enriched.d.mul_vec(&state.u), &mut b);
    let zero = vec![S::zero(); enriched.dim_y()];
    let scale = b.iter().fold(S::zero(), |m, v| m.max(v.abs())).max(S::one());
    let lambda_hat = newton_solve(&op, &b, &zero, S::lit(1e-13) * scale, 100)?;
    let iy = tensor_interpolation(&pair.y_t, &pair.y_x, &enriched.y_t, &enriched.y_x)?;
    let lhs = y_norm(enriched, &sub(&lambda_hat, &iy.mul_vec(&state.lambda)));
    let bundle = ConstantsBundle::from_mu(mu);
    let inner = lambda_gap(pair, state)? + bundle.trace_weight() * initial_defect(pair, data, &state.u)?;
    let rhs = rho * inner;
    Ok(PjotrReport {
        rho,
        lhs,
        rhs,
        satisfied: lhs <= rhs,
        degenerate: inner <= S::lit(1e-14),
    })
}

/// Result of [`enrich_until_pjotr`].
#[derive(Debug, Clone)]
pub struct PjotrSearch<S> {
    /// Level of the last report (the satisfying one when `report.satisfied`).
    pub level: usize,
    pub report: PjotrReport<S>,
    /// Reports of all visited levels.
    pub history: Vec<PjotrReport<S>>,
    pub pair: TensorSpacePair<S>,
    pub state: SaddleState<S>,
}

/// Refines the test space of `base` uniformly in time and space, level by
/// level, re-solving the discrete system each time, until the quasi-optimality
/// test holds. Level `i` is checked against the test space refined `i + lookahead` times.
pub fn enrich_until_pjotr<S: Scalar>(
    base: &TensorSpacePair<S>,
    data: &ProblemData<S>,
    mu: &MuCoefficient<S>,
    rho: S,
    max_levels: usize,
    lookahead: usize,
) -> Result<PjotrSearch<S>> {
    if lookahead == 0 {
        return Err(Error::InvalidParameter("lookahead must be positive".into()));
    }
    let mut history = Vec::new();
    for level in 0..=max_levels {
        let pair = base.with_refined_test(level, level)?;
        let ctx = RieszContext::new(&pair)?;
        let sys = SaddleSystem::new(&pair, mu)?;
        let rhs = assemble_rhs(data, &pair)?;
        let state = sys.solve_reference(&rhs, &ctx, &ReferenceOptions::default())?;
        let enriched = base.with_refined_test(level + lookahead, level + lookahead)?;
        let report = check_pjotr(&pair, &state, data, mu, &enriched, rho)?;
        history.push(report);
        if report.satisfied || level == max_levels {
            return Ok(PjotrSearch { level, report, history, pair, state });
        }
    }
    unreachable!("loop returns at max_levels")
}

/// Efficiency/reliability ratio with its bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport<S> {
    pub ratio: S,
    pub lower: S,
    pub upper: S,
}

impl<S: Scalar> EfficiencyReport<S> {
    pub fn holds(&self, slack: S) -> bool {
        self.ratio >= self.lower / slack && self.ratio <= self.upper * slack
    }
}

/// `‖u − u^δ‖_X / sqrt(‖λ^δ − u^δ‖²_{Y^δ} + ‖u₀ − γ₀u^δ‖²_H)` with the fine
/// reference as surrogate for `u`, and the bounds for parameter `rho`.
pub fn efficiency_reliability<S: Scalar>(
    reference: &FineReference<S>,
    pair: &TensorSpacePair<S>,
    state: &SaddleState<S>,
    data: &ProblemData<S>,
    bundle: &ConstantsBundle<S>,
    rho: S,
) -> Result<EfficiencyReport<S>> {
    let gap = lambda_gap(pair, state)?;
    let defect = initial_defect(pair, data, &state.u)?;
    let den = (gap * gap + defect * defect).sqrt();
    if den < S::lit(1e-14) {
        return Err(Error::Undefined("estimator vanishes".into()));
    }
    Ok(EfficiencyReport {
        ratio: reference.error_x(pair, &state.u)? / den,
        lower: bundle.efficiency_lower(),
        upper: bundle.reliability_upper(rho),
    })
}

/// One level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<S> {
    /// Elements per direction.
    pub n: usize,
    pub dim_x: usize,
    /// `‖u_ref − u^δ‖_X`.
    pub err_x: S,
    /// Observed order against the previous level.
    pub rate: Option<S>,
    pub lambda_gap: S,
    pub quasi_opt: QuasiOptReport<S>,
    pub apriori: AprioriReport<S>,
}

/// Solves on `n × n` meshes for each `n` in `sizes` and compares against the
/// reference `refinements` levels finer.
pub fn convergence_study<S: Scalar>(
    data: &ProblemData<S>,
    mu: &MuCoefficient<S>,
    t_final: S,
    sizes: &[usize],
    refinements: usize,
    tol: f64,
) -> Result<Vec<ConvergenceRow<S>>> {
    let bundle = ConstantsBundle::from_mu(mu);
    let mut rows: Vec<ConvergenceRow<S>> = Vec::new();
    for &n in sizes {
        let pair = TensorSpacePair::uniform_default(t_final, n, n)?;
        let ctx = RieszContext::new(&pair)?;
        let sys = SaddleSystem::new(&pair, mu)?;
        let rhs = assemble_rhs(data, &pair)?;
        let state = sys.solve_reference(&rhs, &ctx, &ReferenceOptions { tol, ..ReferenceOptions::default() })?;
        let reference = FineReference::new(&pair, data, mu, refinements, tol)?;
        let gamma = infsup_report(&pair, refinements, false)?.gamma_lower;
        let quasi_opt = quasi_opt_ratio(&reference, &pair, &state, &bundle, gamma)?;
        let apriori = thm61_check(&reference, &ctx, data, &state, &bundle)?;
        let rate = rows.last().map(|p| (p.err_x / quasi_opt.error).ln() / (S::from_count(n) / S::from_count(p.n)).ln());
        rows.push(ConvergenceRow {
            n,
            dim_x: pair.dim_x(),
            err_x: quasi_opt.error,
            rate,
            lambda_gap: lambda_gap(&pair, &state)?,
            quasi_opt,
            apriori,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log err` against `log(1/h)`.
pub fn fitted_rate<S: Scalar>(sizes: &[usize], errors: &[S]) -> S {
    let xs: Vec<S> = sizes.iter().map(|&n| S::from_count(n).ln()).collect();
    let ys: Vec<S> = errors.iter().map(|e| -e.ln()).collect();
    let k = S::from_count(xs.len());
    let mx = xs.iter().copied().sum::<S>() / k;
    let my = ys.iter().copied().sum::<S>() / k;
    let sxy: S = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: S = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Spatial inf-sup values over `levels` uniform refinements of an `n0`-element mesh.
pub fn gamma_x_sequence<S: Scalar>(n0: usize, levels: usize, refinements: usize) -> Result<Vec<S>> {
    (0..levels)
        .map(|l| {
            let mesh = crate::spaces::Mesh1D::uniform(S::zero(), S::one(), n0 << l)?;
            let space = FeSpace1D::new(mesh, BasisSpec::CG1_DIRICHLET)?;
            gamma_x(&space, &space, refinements)
        })
        .collect()
}

/// Interpolation between nested one-dimensional spaces, re-exported for studies.
pub fn nested_interpolation<S: Scalar>(src: &FeSpace1D<S>, dst: &FeSpace1D<S>) -> Result<SparseMatrix<S>> {
    interpolation_matrix(src, dst)
}
