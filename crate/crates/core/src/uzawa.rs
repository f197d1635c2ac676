//! Inexact Uzawa iteration with inner Zarantonello loops, its parameter
//! planning, and the residual-based a posteriori estimate.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sub};
use crate::riesz::RieszContext;
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::system::{ConstantsBundle, Rhs, SaddleState, SaddleSystem};

/// Output of [`plan_inner_count`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UzawaPlan<S> {
    pub c_3: S,
    /// Smallest admissible number of inner steps.
    pub inner_steps: usize,
}

/// `C_3 = (1/σ̂)((σ̂ − σ_S)/θ*_S + 1/m_A)` and the smallest `L ≥ 1` with
/// `σ_A^L (C_3 + 1/m_A) ≤ (σ̂ − σ_S)/θ*_S`.
pub fn plan_inner_count<S: Scalar>(bundle: &ConstantsBundle<S>, sigma_hat: S) -> Result<UzawaPlan<S>> {
    let a = bundle.a_constants();
    let s = bundle.s_constants();
    if !(sigma_hat > s.sigma && sigma_hat < S::one()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_hat_S must lie in ({}, 1), got {sigma_hat}",
            s.sigma
        )));
    }
    let gap = (sigma_hat - s.sigma) / s.theta_star;
    let inv_m = S::one() / bundle.m_a;
    let c_3 = (gap + inv_m) / sigma_hat;
    let target = gap / (c_3 + inv_m);
    let mut power = a.sigma;
    let mut l = 1;
    while power > target {
        l += 1;
        power *= a.sigma;
        if l > 100_000_000 {
            return Err(Error::InvalidParameter("inner step count exceeds 1e8".into()));
        }
    }
    Ok(UzawaPlan { c_3, inner_steps: l })
}

/// Midpoint default `(1 + σ_S)/2`.
pub fn default_sigma_hat<S: Scalar>(bundle: &ConstantsBundle<S>) -> S {
    (S::one() + bundle.s_constants().sigma) * S::lit(0.5)
}

/// Parameters of [`run_inexact_uzawa`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UzawaConfig<S> {
    pub sigma_hat_s: S,
    pub inner_steps: usize,
    pub theta_a: S,
    pub theta_s: S,
    pub c_3: S,
    pub tol: S,
    pub max_outer: usize,
}

impl<S: Scalar> UzawaConfig<S> {
    /// Theoretical parameters: step sizes `θ*`, planned `L` and `C_3`.
    pub fn theoretical(bundle: &ConstantsBundle<S>, sigma_hat: Option<S>, tol: S, max_outer: usize) -> Result<Self> {
        let sigma_hat = sigma_hat.unwrap_or_else(|| default_sigma_hat(bundle));
        let plan = plan_inner_count(bundle, sigma_hat)?;
        if !(tol > S::zero()) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(Self {
            sigma_hat_s: sigma_hat,
            inner_steps: plan.inner_steps,
            theta_a: bundle.a_constants().theta_star,
            theta_s: bundle.s_constants().theta_star,
            c_3: plan.c_3,
            tol,
            max_outer,
        })
    }

    /// Replaces the planned inner count.
    pub fn with_inner_steps(mut self, l: usize) -> Self {
        self.inner_steps = l.max(1);
        self
    }

    /// Replaces the outer step size.
    pub fn with_theta_s(mut self, theta: S) -> Self {
        self.theta_s = theta;
        self
    }
}

/// Residual-based estimate at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<S> {
    pub eta: S,
    pub res_y: S,
    pub res_x: S,
    pub r_y: Vec<S>,
    pub r_x: Vec<S>,
    /// `R_X⁻¹ r_X`, reused by the outer update.
    pub riesz_r_x: Vec<S>,
}

/// `η = ‖r_Y‖_{(Y^δ)'} + ‖r_X‖_{(X^δ)'}` with `[r_Y; r_X] = [f; g] − N [λ; u]`.
pub fn aposteriori_estimate<S: Scalar>(sys: &SaddleSystem<S>, state: &SaddleState<S>, rhs: &Rhs<S>, ctx: &RieszContext<S>) -> Estimate<S> {
    let (r_y, r_x) = sys.residual(state, rhs);
    let res_y = dot(&r_y, &ctx.riesz_y_solve(&r_y)).max(S::zero()).sqrt();
    let riesz_r_x = ctx.riesz_x_solve(&r_x);
    let res_x = dot(&r_x, &riesz_r_x).max(S::zero()).sqrt();
    Estimate {
        eta: res_y + res_x,
        res_y,
        res_x,
        r_y,
        r_x,
        riesz_r_x,
    }
}

/// One outer step of the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct UzawaRow<S> {
    pub k: usize,
    /// Estimate at `(λ^{(k+1)}, u^{(k)})`.
    pub eta: S,
    pub res_y: S,
    pub res_x: S,
    /// `‖u^δ − u^{(k)}‖_{X^δ}` against a supplied reference.
    pub err_u: Option<S>,
    /// `‖λ^δ − λ^{(k)}‖_Y` against a supplied reference.
    pub err_lambda: Option<S>,
    pub inner_count: usize,
    pub riesz_y_solves: usize,
    pub riesz_x_solves: usize,
    pub nonlinear_applies: usize,
}

/// Per-iteration record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UzawaTrace<S> {
    pub rows: Vec<UzawaRow<S>>,
}

impl<S: Scalar> UzawaTrace<S> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_eta(&self) -> Option<S> {
        self.rows.last().map(|r| r.eta)
    }

    /// `C_4 = max{‖λ^δ − λ^{(0)}‖_Y / C_3, ‖u^δ − u^{(0)}‖_{X^δ}}` from the first row.
    pub fn c_4(&self, c_3: S) -> Option<S> {
        let r = self.rows.first()?;
        Some((r.err_lambda? / c_3).max(r.err_u?))
    }

    /// Largest violations `(u, λ)` of `‖u^δ−u^{(k)}‖ ≤ σ̂^k C_4` and
    /// `‖λ^δ−λ^{(k)}‖/C_3 ≤ σ̂^k C_4` over all rows; negative means satisfied.
    pub fn envelope_violation(&self, sigma_hat: S, c_3: S) -> Option<(S, S)> {
        let c_4 = self.c_4(c_3)?;
        let mut worst = (S::neg_infinity(), S::neg_infinity());
        let mut env = c_4;
        for r in &self.rows {
            worst.0 = worst.0.max(r.err_u? - env);
            worst.1 = worst.1.max(r.err_lambda? / c_3 - env);
            env *= sigma_hat;
        }
        Some(worst)
    }
}

/// Result of [`run_inexact_uzawa`].
#[derive(Debug, Clone)]
pub struct UzawaOutcome<S> {
    /// `(λ^{(k+1)}, u^{(k)})` at the stopping index.
    pub state: SaddleState<S>,
    pub trace: UzawaTrace<S>,
    pub converged: bool,
}

/// Inexact Uzawa: `L` inner Zarantonello steps for `λ` warm-started at the
/// previous `λ`, then one Zarantonello step for `u` on the Schur operator.
/// Stops once the estimate at `(λ^{(k+1)}, u^{(k)})` is at most `cfg.tol`.
/// With `reference`, each row also records the errors of `(λ^{(k)}, u^{(k)})`.
pub fn run_inexact_uzawa<S: Scalar>(
    sys: &SaddleSystem<S>,
    rhs: &Rhs<S>,
    ctx: &RieszContext<S>,
    cfg: &UzawaConfig<S>,
    start: &SaddleState<S>,
    reference: Option<&SaddleState<S>>,
) -> Result<UzawaOutcome<S>> {
    run_inexact_uzawa_with(sys, rhs, ctx, cfg, start, reference, None)
}

/// Replacement for `R_X⁻¹` in the outer update.
pub type OuterDirection<'a, S> = &'a dyn Fn(&[S]) -> Vec<S>;

/// [`run_inexact_uzawa`] with the outer update direction `outer(r_X)` in
/// place of `R_X⁻¹ r_X`, e.g. a spectrally equivalent preconditioner.
/// The estimate `η` still uses the exact dual norms.
pub fn run_inexact_uzawa_with<S: Scalar>(
    sys: &SaddleSystem<S>,
    rhs: &Rhs<S>,
    ctx: &RieszContext<S>,
    cfg: &UzawaConfig<S>,
    start: &SaddleState<S>,
    reference: Option<&SaddleState<S>>,
    outer: Option<OuterDirection<'_, S>>,
) -> Result<UzawaOutcome<S>> {
    if start.lambda.len() != sys.pair.dim_y() || start.u.len() != sys.pair.dim_x() {
        return Err(Error::DimensionMismatch {
            expected: sys.pair.dim_y() + sys.pair.dim_x(),
            found: start.lambda.len() + start.u.len(),
        });
    }
    if cfg.inner_steps == 0 || !(cfg.theta_a > S::zero()) || !(cfg.theta_s > S::zero()) {
        return Err(Error::InvalidParameter("inner steps and step sizes must be positive".into()));
    }
    let mut lambda = start.lambda.clone();
    let mut u = start.u.clone();
    let mut trace = UzawaTrace::default();
    for k in 0..=cfg.max_outer {
        let (err_u, err_lambda) = match reference {
            Some(r) => (Some(ctx.norm_x_delta(&sub(&r.u, &u))), Some(ctx.norm_y(&sub(&r.lambda, &lambda)))),
            None => (None, None),
        };
        let mut b = rhs.f.clone();
        axpy(-S::one(), &sys.pair.d.mul_vec(&u), &mut b);
        for _ in 0..cfg.inner_steps {
            let r = sub(&b, &sys.op_y.apply(&lambda));
            axpy(cfg.theta_a, &ctx.riesz_y_solve(&r), &mut lambda);
        }
        let next = SaddleState { lambda, u };
        let est = aposteriori_estimate(sys, &next, rhs, ctx);
        trace.rows.push(UzawaRow {
            k,
            eta: est.eta,
            res_y: est.res_y,
            res_x: est.res_x,
            err_u,
            err_lambda,
            inner_count: cfg.inner_steps,
            riesz_y_solves: cfg.inner_steps + 1,
            riesz_x_solves: 1,
            nonlinear_applies: cfg.inner_steps + 2,
        });
        if !est.eta.is_finite() {
            return Err(Error::NotConverged {
                iterations: k,
                last: est.eta.as_f64(),
            });
        }
        if est.eta <= cfg.tol || k == cfg.max_outer {
            return Ok(UzawaOutcome {
                converged: est.eta <= cfg.tol,
                state: next,
                trace,
            });
        }
        lambda = next.lambda;
        u = next.u;
        match outer {
            Some(p) => axpy(-cfg.theta_s, &p(&est.r_x), &mut u),
            None => axpy(-cfg.theta_s, &est.riesz_r_x, &mut u),
        }
    }
    unreachable!("loop returns at k = max_outer")
}

/// One random perturbation of a reference solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSample<S> {
    /// `‖Δλ‖_{Y^δ} + ‖Δu‖_{X^δ}`.
    pub error: S,
    pub eta: S,
    pub ratio: S,
}

/// Evaluates the estimate at `samples` random perturbations of `reference`.
/// Each perturbation has Gaussian direction and relative size drawn
/// log-uniformly from `[1e-4, 1]` of the reference norm (at least `1e-4`).
pub fn perturbation_band<S: Scalar>(
    sys: &SaddleSystem<S>,
    rhs: &Rhs<S>,
    ctx: &RieszContext<S>,
    reference: &SaddleState<S>,
    samples: usize,
    rng: &mut SeededRng,
) -> Vec<BandSample<S>> {
    let base = (ctx.norm_y(&reference.lambda) + ctx.norm_x_delta(&reference.u)).max(S::one());
    (0..samples)
        .map(|_| {
            let mut dl: Vec<S> = rng.normal_vec(reference.lambda.len());
            let mut du: Vec<S> = rng.normal_vec(reference.u.len());
            let size = S::lit(10f64.powf(rng.uniform_in(-4.0, 0.0))) * base;
            let ny = ctx.norm_y(&dl).max(S::min_positive_value());
            let nx = ctx.norm_x_delta(&du).max(S::min_positive_value());
            let split = S::lit(rng.uniform());
            dl.iter_mut().for_each(|v| *v *= size * split / ny);
            du.iter_mut().for_each(|v| *v *= size * (S::one() - split) / nx);
            let state = SaddleState {
                lambda: reference.lambda.iter().zip(&dl).map(|(&a, &b)| a + b).collect(),
                u: reference.u.iter().zip(&du).map(|(&a, &b)| a + b).collect(),
            };
            let error = ctx.norm_y(&dl) + ctx.norm_x_delta(&du);
            let eta = aposteriori_estimate(sys, &state, rhs, ctx).eta;
            BandSample { error, eta, ratio: error / eta }
        })
        .collect()
}
