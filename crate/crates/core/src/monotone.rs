//! Quasi-linear spatial operator `(A η)(ξ) = ∫ μ(t, x, |η_x|²) η_x ξ_x`,
//! constants of Lipschitz continuous strongly monotone maps, and the
//! Zarantonello fixed-point solver.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, SparseMatrix, SpdFactorization};
use crate::scalar::Scalar;
use crate::spaces::{FeSpace1D, QuadratureRule, TensorSpacePair};

/// Scalar field `(t, x, s) ↦ value`.
pub type ScalarField<S> = Arc<dyn Fn(S, S, S) -> S + Send + Sync>;

/// Nonlinearity `μ(t, x, s)` with bounds `m_μ (r−s) ≤ μ(r²) r − μ(s²) s ≤ M_μ (r−s)`.
#[derive(Clone)]
pub struct MuCoefficient<S> {
    name: String,
    mu: ScalarField<S>,
    dmu_ds: Option<ScalarField<S>>,
    m_mu: S,
    big_m_mu: S,
}

impl<S: fmt::Debug> fmt::Debug for MuCoefficient<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MuCoefficient")
            .field("name", &self.name)
            .field("m_mu", &self.m_mu)
            .field("M_mu", &self.big_m_mu)
            .finish()
    }
}

impl<S: Scalar> MuCoefficient<S> {
    /// A user coefficient; `dmu_ds` is approximated by central differences when absent.
    pub fn new(
        name: impl Into<String>,
        mu: ScalarField<S>,
        dmu_ds: Option<ScalarField<S>>,
        m_mu: S,
        big_m_mu: S,
    ) -> Result<Self> {
        if !(m_mu > S::zero()) || big_m_mu < m_mu || !big_m_mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need 0 < m_mu <= M_mu, got m_mu = {m_mu}, M_mu = {big_m_mu}"
            )));
        }
        Ok(Self {
            name: name.into(),
            mu,
            dmu_ds,
            m_mu,
            big_m_mu,
        })
    }

    /// `μ ≡ c`, the linear (heat) case.
    pub fn constant(c: S) -> Result<Self> {
        Self::new(
            format!("constant {c}"),
            Arc::new(move |_, _, _| c),
            Some(Arc::new(|_, _, _| S::zero())),
            c,
            c,
        )
    }

    /// `μ(s) = 1 + 1/(1+s)` with `m_μ = 7/8` (attained at `s = 3`) and `M_μ = 2`.
    pub fn one_plus_inv() -> Self {
        Self::new(
            "one-plus-inv",
            Arc::new(|_, _, s: S| S::one() + S::one() / (S::one() + s)),
            Some(Arc::new(|_, _, s: S| -S::one() / ((S::one() + s) * (S::one() + s)))),
            S::lit(0.875),
            S::lit(2.0),
        )
        .expect("valid bounds")
    }

    /// `μ(s) = a + b s/(1+s)`, `a > 0`, `b >= 0`, with `m_μ = a`, `M_μ = a + 9b/8`.
    pub fn bounded_ramp(a: S, b: S) -> Result<Self> {
        if !(a > S::zero()) || b < S::zero() {
            return Err(Error::InvalidParameter(format!(
                "bounded-ramp needs a > 0 and b >= 0, got a = {a}, b = {b}"
            )));
        }
        Self::new(
            format!("bounded-ramp {a} {b}"),
            Arc::new(move |_, _, s: S| a + b * s / (S::one() + s)),
            Some(Arc::new(move |_, _, s: S| b / ((S::one() + s) * (S::one() + s)))),
            a,
            a + S::lit(1.125) * b,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m_mu(&self) -> S {
        self.m_mu
    }

    pub fn big_m_mu(&self) -> S {
        self.big_m_mu
    }

    #[inline]
    pub fn mu(&self, t: S, x: S, s: S) -> S {
        (self.mu)(t, x, s)
    }

    #[inline]
    pub fn dmu_ds(&self, t: S, x: S, s: S) -> S {
        match &self.dmu_ds {
            Some(d) => d(t, x, s),
            None => {
                let h = S::lit(1e-6) * (S::one() + s);
                let lo = (s - h).max(S::zero());
                ((self.mu)(t, x, s + h) - (self.mu)(t, x, lo)) / (s + h - lo)
            }
        }
    }

    /// `d/dr (μ(r²) r) = μ(s) + 2 s μ'(s)` at `s = r²`.
    #[inline]
    pub fn flux_derivative(&self, t: S, x: S, s: S) -> S {
        self.mu(t, x, s) + S::lit(2.0) * s * self.dmu_ds(t, x, s)
    }

    /// Checks the declared bounds against [`empirical_mu_bounds`] at a few
    /// sample points `(t, x)`, allowing relative slack `rel_slack`.
    pub fn validate(&self, t_final: S, r_max: S, n: usize, rel_slack: S) -> Result<()> {
        for &ft in &[0.0, 0.5, 1.0] {
            for &fx in &[0.25, 0.5, 0.75] {
                let t = t_final * S::lit(ft);
                let x = S::lit(fx);
                let (lo, hi) = empirical_mu_bounds(|s| self.mu(t, x, s), r_max, n)?;
                let slack = rel_slack * self.big_m_mu;
                if lo < self.m_mu - slack || hi > self.big_m_mu + slack {
                    return Err(Error::InvalidParameter(format!(
                        "{}: declared bounds [{}, {}] inconsistent with sampled [{lo}, {hi}]",
                        self.name, self.m_mu, self.big_m_mu
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Minimum and maximum difference quotients of `g(r) = μ(r²) r` on a uniform
/// grid of `[0, r_max]` with `n` intervals.
pub fn empirical_mu_bounds<S: Scalar>(mu_fn: impl Fn(S) -> S, r_max: S, n: usize) -> Result<(S, S)> {
    if n < 100 {
        return Err(Error::InvalidParameter(format!("grid needs at least 100 intervals, got {n}")));
    }
    if !(r_max > S::zero()) {
        return Err(Error::InvalidParameter("r_max must be positive".into()));
    }
    let dr = r_max / S::from_count(n);
    let g = |r: S| mu_fn(r * r) * r;
    let mut prev = g(S::zero());
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for k in 1..=n {
        let cur = g(dr * S::from_count(k));
        let q = (cur - prev) / dr;
        lo = lo.min(q);
        hi = hi.max(q);
        prev = cur;
    }
    if !(lo > S::zero()) {
        return Err(Error::NotMonotone { m_hat: lo.as_f64() });
    }
    Ok((lo, hi))
}

/// Lipschitz constant `L`, monotonicity constant `m`, optimal damping
/// `θ* = m/L²` and contraction factor `σ = sqrt(1 − m²/L²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneConstants<S> {
    pub l: S,
    pub m: S,
    pub theta_star: S,
    pub sigma: S,
}

impl<S: Scalar> MonotoneConstants<S> {
    pub fn new(l: S, m: S) -> Result<Self> {
        if !(m > S::zero()) || l < m || !l.is_finite() {
            return Err(Error::InvalidParameter(format!("need 0 < m <= L, got L = {l}, m = {m}")));
        }
        let q = m / l;
        Ok(Self {
            l,
            m,
            theta_star: m / (l * l),
            sigma: (S::one() - q * q).max(S::zero()).sqrt(),
        })
    }
}

/// Constants of `A` for the gradient-type operator: `L_A = 3 M_μ`, `m_A = m_μ`.
pub fn constants_from_mu<S: Scalar>(mu: &MuCoefficient<S>) -> MonotoneConstants<S> {
    MonotoneConstants::new(S::lit(3.0) * mu.big_m_mu(), mu.m_mu()).expect("validated bounds")
}

/// Constants of the inverse map: `L = 1/m`, `m = m/L²`.
pub fn inverse_constants<S: Scalar>(c: &MonotoneConstants<S>) -> MonotoneConstants<S> {
    MonotoneConstants::new(S::one() / c.m, c.m / (c.l * c.l)).expect("inverse of valid constants")
}

/// Which discrete space of a [`TensorSpacePair`] an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Trial,
    Test,
}

#[derive(Debug, Clone)]
struct ElementBlock<S> {
    tdofs: [Option<usize>; 2],
    xdofs: [Option<usize>; 2],
    dx: [S; 2],
    x0: S,
    hx: S,
}

/// Galerkin discretization of `A` on a tensor space `time ⊗ space`, evaluated
/// by tensor Gauss quadrature on every time-space element.
#[derive(Debug, Clone)]
pub struct GalerkinOperator<S> {
    time: FeSpace1D<S>,
    space: FeSpace1D<S>,
    mu: MuCoefficient<S>,
    quad_t: QuadratureRule<S>,
    quad_x: QuadratureRule<S>,
    /// Per time element: (t, weight, shape values) at the time quadrature points.
    tpoints: Vec<Vec<(S, S, [S; 2])>>,
    blocks_x: Vec<ElementBlock<S>>,
    tdofs: Vec<[Option<usize>; 2]>,
}

impl<S: Scalar> GalerkinOperator<S> {
    /// Operator with `nq`-point Gauss rules in time and space.
    pub fn new(time: FeSpace1D<S>, space: FeSpace1D<S>, mu: MuCoefficient<S>, nq: usize) -> Result<Self> {
        let quad_t = QuadratureRule::gauss(nq)?;
        let quad_x = QuadratureRule::gauss(nq)?;
        let mut tpoints = Vec::new();
        let mut tdofs = Vec::new();
        for et in 0..time.num_elements() {
            let (a, b) = time.mesh().element(et);
            let h = b - a;
            let pts = quad_t
                .points
                .iter()
                .zip(&quad_t.weights)
                .map(|(&p, &w)| (a + h * p, w * h, time.shape(p)))
                .collect();
            tpoints.push(pts);
            let d = time.element_dofs(et);
            tdofs.push([d[0], d.get(1).copied().flatten()]);
        }
        let mut blocks_x = Vec::new();
        for ex in 0..space.num_elements() {
            let (a, b) = space.mesh().element(ex);
            let d = space.element_dofs(ex);
            blocks_x.push(ElementBlock {
                tdofs: [None, None],
                xdofs: [d[0], d.get(1).copied().flatten()],
                dx: space.shape_derivative(b - a),
                x0: a,
                hx: b - a,
            });
        }
        Ok(Self {
            time,
            space,
            mu,
            quad_t,
            quad_x,
            tpoints,
            blocks_x,
            tdofs,
        })
    }

    /// The operator on the trial or test space of `pair`, 3×3 Gauss points.
    pub fn for_pair(pair: &TensorSpacePair<S>, side: Side, mu: MuCoefficient<S>) -> Result<Self> {
        match side {
            Side::Trial => Self::new(pair.x_t.clone(), pair.x_x.clone(), mu, 3),
            Side::Test => Self::new(pair.y_t.clone(), pair.y_x.clone(), mu, 3),
        }
    }

    pub fn dim(&self) -> usize {
        self.time.ndofs() * self.space.ndofs()
    }

    pub fn mu(&self) -> &MuCoefficient<S> {
        &self.mu
    }

    pub fn time_space(&self) -> &FeSpace1D<S> {
        &self.time
    }

    pub fn space_space(&self) -> &FeSpace1D<S> {
        &self.space
    }

    pub fn quadrature_order(&self) -> usize {
        self.quad_t.order.min(self.quad_x.order)
    }

    fn for_each_point(&self, w: &[S], mut visit: impl FnMut(&ElementBlock<S>, [S; 2], S, S, S, S)) {
        let nx = self.space.ndofs();
        for (et, tpts) in self.tpoints.iter().enumerate() {
            let td = self.tdofs[et];
            for blk in &self.blocks_x {
                let mut c = [[S::zero(); 2]; 2];
                for (ca, &ti) in c.iter_mut().zip(&td) {
                    if let Some(i) = ti {
                        for (cab, &xj) in ca.iter_mut().zip(&blk.xdofs) {
                            if let Some(j) = xj {
                                *cab = w[i * nx + j];
                            }
                        }
                    }
                }
                let block = ElementBlock {
                    tdofs: td,
                    ..blk.clone()
                };
                for &(t, wt, phi) in tpts {
                    let grad = (0..2).fold(S::zero(), |acc, a| {
                        acc + phi[a] * (c[a][0] * blk.dx[0] + c[a][1] * blk.dx[1])
                    });
                    for (&p, &wx) in self.quad_x.points.iter().zip(&self.quad_x.weights) {
                        let x = blk.x0 + blk.hx * p;
                        visit(&block, phi, t, x, grad, wt * wx * blk.hx);
                    }
                }
            }
        }
    }

    /// Dual vector `(A w)(basis)`.
    pub fn apply(&self, w: &[S]) -> Vec<S> {
        assert_eq!(w.len(), self.dim(), "operator input dimension");
        let nx = self.space.ndofs();
        let mut out = vec![S::zero(); self.dim()];
        self.for_each_point(w, |blk, phi, t, x, grad, weight| {
            let flux = self.mu.mu(t, x, grad * grad) * grad * weight;
            for (&ti, &pa) in blk.tdofs.iter().zip(&phi) {
                if let Some(i) = ti {
                    for (&xj, &db) in blk.xdofs.iter().zip(&blk.dx) {
                        if let Some(j) = xj {
                            out[i * nx + j] += flux * pa * db;
                        }
                    }
                }
            }
        });
        out
    }

    /// Jacobian of [`GalerkinOperator::apply`] at `w` (symmetric positive definite).
    pub fn jacobian(&self, w: &[S]) -> SparseMatrix<S> {
        let nx = self.space.ndofs();
        let mut trip = Vec::new();
        self.for_each_point(w, |blk, phi, t, x, grad, weight| {
            let g = self.mu.flux_derivative(t, x, grad * grad) * weight;
            for a in 0..2 {
                let Some(i) = blk.tdofs[a] else { continue };
                for b in 0..2 {
                    let Some(j) = blk.xdofs[b] else { continue };
                    for a2 in 0..2 {
                        let Some(i2) = blk.tdofs[a2] else { continue };
                        for b2 in 0..2 {
                            let Some(j2) = blk.xdofs[b2] else { continue };
                            trip.push((i * nx + j, i2 * nx + j2, g * phi[a] * phi[a2] * blk.dx[b] * blk.dx[b2]));
                        }
                    }
                }
            }
        });
        SparseMatrix::from_triplets(self.dim(), self.dim(), &trip).expect("local indices in range")
    }
}

/// Free-function form of [`GalerkinOperator::apply`].
pub fn apply_a<S: Scalar>(op: &GalerkinOperator<S>, w: &[S]) -> Vec<S> {
    op.apply(w)
}

/// Result of a Zarantonello run.
#[derive(Debug, Clone)]
pub struct ZarantonelloOutcome<S> {
    pub x: Vec<S>,
    pub iterations: usize,
    /// Riesz norm of the last update.
    pub final_step_norm: S,
    pub converged: bool,
}

/// Iterates `x ← x − θ R⁻¹(G x − f)` with `θ = c.theta_star` until the
/// update, measured in the Riesz norm, is at most `tol`.
pub fn zarantonello_solve<S: Scalar>(
    apply_g: &dyn Fn(&[S]) -> Vec<S>,
    riesz_solve: &dyn Fn(&[S]) -> Vec<S>,
    f: &[S],
    x0: &[S],
    c: &MonotoneConstants<S>,
    tol: S,
    max_iter: usize,
) -> ZarantonelloOutcome<S> {
    zarantonello_observed(apply_g, riesz_solve, f, x0, c.theta_star, tol, max_iter, &mut |_, _| {})
}

/// [`zarantonello_solve`] with explicit damping `theta` and a callback
/// receiving every iterate (including `x0` as iterate 0).
#[allow(clippy::too_many_arguments)]
pub fn zarantonello_observed<S: Scalar>(
    apply_g: &dyn Fn(&[S]) -> Vec<S>,
    riesz_solve: &dyn Fn(&[S]) -> Vec<S>,
    f: &[S],
    x0: &[S],
    theta: S,
    tol: S,
    max_iter: usize,
    observer: &mut dyn FnMut(usize, &[S]),
) -> ZarantonelloOutcome<S> {
    let mut x = x0.to_vec();
    observer(0, &x);
    let mut step = S::infinity();
    for it in 1..=max_iter {
        let r: Vec<S> = apply_g(&x).iter().zip(f).map(|(&g, &fi)| g - fi).collect();
        let z = riesz_solve(&r);
        step = theta * dot(&r, &z).max(S::zero()).sqrt();
        for (xi, &zi) in x.iter_mut().zip(&z) {
            *xi -= theta * zi;
        }
        observer(it, &x);
        if step <= tol {
            return ZarantonelloOutcome {
                x,
                iterations: it,
                final_step_norm: step,
                converged: true,
            };
        }
    }
    ZarantonelloOutcome {
        x,
        iterations: max_iter,
        final_step_norm: step,
        converged: max_iter == 0 && step <= tol,
    }
}

/// Damped Newton iteration for `A w = b`, with step halving until the
/// Euclidean residual decreases. Returns once `‖A w − b‖₂ <= tol` or the
/// Newton update stagnates at round-off level.
pub fn newton_solve<S: Scalar>(op: &GalerkinOperator<S>, b: &[S], x0: &[S], tol: S, max_iter: usize) -> Result<Vec<S>> {
    let mut x = x0.to_vec();
    let resid = |x: &[S]| -> Vec<S> { op.apply(x).iter().zip(b).map(|(&a, &bi)| a - bi).collect() };
    let mut r = resid(&x);
    let mut rn = norm2(&r);
    for _ in 0..max_iter {
        if rn <= tol {
            return Ok(x);
        }
        let j = op.jacobian(&x);
        let delta = SpdFactorization::new(&j)?.solve(&r);
        let mut alpha = S::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<S> = x.iter().zip(&delta).map(|(&xi, &di)| xi - alpha * di).collect();
            let rt = resid(&trial);
            let rtn = norm2(&rt);
            if rtn < rn {
                x = trial;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            alpha *= S::lit(0.5);
        }
        let stagnated = norm2(&delta) <= S::lit(64.0) * S::epsilon() * norm2(&x).max(S::min_positive_value());
        if !accepted || stagnated {
            return if rn <= tol || stagnated {
                Ok(x)
            } else {
                Err(Error::NotConverged {
                    iterations: max_iter,
                    last: rn.as_f64(),
                })
            };
        }
    }
    if rn <= tol {
        Ok(x)
    } else {
        Err(Error::NotConverged {
            iterations: max_iter,
            last: rn.as_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_constants() {
        let c = constants_from_mu(&MuCoefficient::<f64>::constant(1.0).unwrap());
        assert_eq!((c.l, c.m), (3.0, 1.0));
        assert!((c.theta_star - 1.0 / 9.0).abs() < 1e-16);
        assert!((c.sigma - 8f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quasi_linear_constants() {
        let c = constants_from_mu(&MuCoefficient::<f64>::one_plus_inv());
        assert_eq!((c.l, c.m), (6.0, 0.875));
    }

    #[test]
    fn inverse_constant_examples() {
        let inv = |l: f64, m: f64| {
            let c = inverse_constants(&MonotoneConstants::new(l, m).unwrap());
            (c.l, c.m)
        };
        assert_eq!(inv(1.0, 1.0), (1.0, 1.0));
        assert_eq!(inv(3.0, 1.0), (1.0, 1.0 / 9.0));
        assert_eq!(inv(2.0, 1.0), (1.0, 0.25));
    }

    #[test]
    fn empirical_bounds_constant() {
        let (lo, hi) = empirical_mu_bounds(|_| 2.5f64, 5.0, 200).unwrap();
        assert!((lo - 2.5).abs() < 1e-12 && (hi - 2.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_bounds_reject_negative() {
        assert!(matches!(empirical_mu_bounds(|_| -1.0f64, 1.0, 100), Err(Error::NotMonotone { .. })));
        assert!(empirical_mu_bounds(|_| 1.0f64, 1.0, 10).is_err());
    }

    #[test]
    fn scalar_zarantonello_one_step() {
        let c = MonotoneConstants::new(2.0f64, 2.0).unwrap();
        let out = zarantonello_solve(&|x: &[f64]| vec![2.0 * x[0]], &|r: &[f64]| r.to_vec(), &[3.0], &[0.0], &c, 1e-14, 10);
        assert!((out.x[0] - 1.5).abs() < 1e-15);
        assert!(out.converged && out.iterations == 2);
    }
}
