//! Meshes, piecewise-polynomial bases on intervals, exact assembly of mass,
//! stiffness and derivative-coupling matrices, and the tensor-product
//! trial/test pair `X = X_t ⊗ X_x`, `Y = Y_t ⊗ Y_x`.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix, SpdFactorization};
use crate::scalar::Scalar;

/// Strictly increasing breakpoints of a partition of an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D<S> {
    points: Vec<S>,
}

impl<S: Scalar> Mesh1D<S> {
    pub fn new(points: Vec<S>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMesh("at least two breakpoints required".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh("breakpoints must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMesh("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` equal elements on `[a, b]`.
    pub fn uniform(a: S, b: S, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("element count must be positive".into()));
        }
        let h = (b - a) / S::from_count(n);
        let mut pts: Vec<S> = (0..=n).map(|i| a + h * S::from_count(i)).collect();
        pts[n] = b;
        Self::new(pts)
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    pub fn num_elements(&self) -> usize {
        self.points.len() - 1
    }

    pub fn element(&self, e: usize) -> (S, S) {
        (self.points[e], self.points[e + 1])
    }

    pub fn start(&self) -> S {
        self.points[0]
    }

    pub fn end(&self) -> S {
        self.points[self.points.len() - 1]
    }

    /// Index of the element containing `x` (the right one at interior breakpoints).
    pub fn locate(&self, x: S) -> usize {
        let k = self.points.partition_point(|&p| p <= x);
        k.saturating_sub(1).min(self.num_elements() - 1)
    }

    /// Bisects every element; all original breakpoints are kept.
    pub fn uniform_refine(&self) -> Self {
        let mut pts = Vec::with_capacity(2 * self.points.len() - 1);
        for w in self.points.windows(2) {
            pts.push(w[0]);
            pts.push(S::lit(0.5) * (w[0] + w[1]));
        }
        pts.push(self.end());
        Self { points: pts }
    }

    /// Applies [`Mesh1D::uniform_refine`] `k` times.
    pub fn refined(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |m, _| m.uniform_refine())
    }
}

/// Free-function form of [`Mesh1D::uniform_refine`].
pub fn uniform_refine<S: Scalar>(mesh: &Mesh1D<S>) -> Mesh1D<S> {
    mesh.uniform_refine()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    ContinuousP1,
    DiscontinuousP0,
    DiscontinuousP1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Free,
    ZeroDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub boundary: Boundary,
}

impl BasisSpec {
    pub const CG1: Self = Self {
        family: BasisFamily::ContinuousP1,
        boundary: Boundary::Free,
    };
    pub const CG1_DIRICHLET: Self = Self {
        family: BasisFamily::ContinuousP1,
        boundary: Boundary::ZeroDirichlet,
    };
    pub const DG0: Self = Self {
        family: BasisFamily::DiscontinuousP0,
        boundary: Boundary::Free,
    };
    pub const DG1: Self = Self {
        family: BasisFamily::DiscontinuousP1,
        boundary: Boundary::Free,
    };
}

/// Gauss-Legendre rule on the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<S> {
    pub points: Vec<S>,
    pub weights: Vec<S>,
    /// Highest polynomial degree integrated exactly.
    pub order: usize,
}

impl<S: Scalar> QuadratureRule<S> {
    /// `n`-point Gauss-Legendre rule, `1 <= n <= 5`.
    pub fn gauss(n: usize) -> Result<Self> {
        let (x, w): (&[f64], &[f64]) = match n {
            1 => (&[0.0], &[2.0]),
            2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
            3 => (
                &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
                &[0.555_555_555_555_555_6, 0.888_888_888_888_889, 0.555_555_555_555_555_6],
            ),
            4 => (
                &[-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
                &[0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9],
            ),
            5 => (
                &[-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664],
                &[0.236_926_885_056_189_1, 0.478_628_670_499_366_5, 0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1],
            ),
            _ => return Err(Error::InvalidParameter(format!("Gauss rule with {n} points unsupported"))),
        };
        Ok(Self {
            points: x.iter().map(|&p| S::lit(0.5 * (p + 1.0))).collect(),
            weights: w.iter().map(|&q| S::lit(0.5 * q)).collect(),
            order: 2 * n - 1,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: S, b: S, f: impl Fn(S) -> S) -> S {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .fold(S::zero(), |acc, (&p, &w)| acc + w * h * f(a + h * p))
    }
}

/// Finite element space on a 1D mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace1D<S> {
    mesh: Mesh1D<S>,
    spec: BasisSpec,
    ndofs: usize,
    local: Vec<[Option<usize>; 2]>,
}

impl<S: Scalar> FeSpace1D<S> {
    pub fn new(mesh: Mesh1D<S>, spec: BasisSpec) -> Result<Self> {
        let ne = mesh.num_elements();
        let (ndofs, local) = match (spec.family, spec.boundary) {
            (BasisFamily::ContinuousP1, Boundary::Free) => {
                (ne + 1, (0..ne).map(|e| [Some(e), Some(e + 1)]).collect())
            }
            (BasisFamily::ContinuousP1, Boundary::ZeroDirichlet) => {
                if ne < 2 {
                    return Err(Error::UnsupportedBasis(
                        "zero-Dirichlet P1 needs at least two elements".into(),
                    ));
                }
                let node = |k: usize| if k == 0 || k == ne { None } else { Some(k - 1) };
                (ne - 1, (0..ne).map(|e| [node(e), node(e + 1)]).collect())
            }
            (BasisFamily::DiscontinuousP0, Boundary::Free) => (ne, (0..ne).map(|e| [Some(e), None]).collect()),
            (BasisFamily::DiscontinuousP1, Boundary::Free) => {
                (2 * ne, (0..ne).map(|e| [Some(2 * e), Some(2 * e + 1)]).collect())
            }
            (f, b) => {
                return Err(Error::UnsupportedBasis(format!(
                    "{f:?} with boundary condition {b:?}"
                )))
            }
        };
        Ok(Self {
            mesh,
            spec,
            ndofs,
            local,
        })
    }

    pub fn mesh(&self) -> &Mesh1D<S> {
        &self.mesh
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// Number of local shape functions per element.
    pub fn local_count(&self) -> usize {
        match self.spec.family {
            BasisFamily::DiscontinuousP0 => 1,
            _ => 2,
        }
    }

    /// Global dof of each local shape function on element `e`.
    pub fn element_dofs(&self, e: usize) -> &[Option<usize>] {
        &self.local[e][..self.local_count()]
    }

    /// Values of the local shape functions at reference coordinate `xi`.
    pub fn shape(&self, xi: S) -> [S; 2] {
        match self.spec.family {
            BasisFamily::DiscontinuousP0 => [S::one(), S::zero()],
            _ => [S::one() - xi, xi],
        }
    }

    /// Derivatives of the local shape functions on an element of length `h`.
    pub fn shape_derivative(&self, h: S) -> [S; 2] {
        match self.spec.family {
            BasisFamily::DiscontinuousP0 => [S::zero(), S::zero()],
            _ => [-S::one() / h, S::one() / h],
        }
    }

    /// Value and derivative of the expansion `coeffs` at `x`, evaluated on element `e`.
    pub fn eval_on(&self, coeffs: &[S], e: usize, x: S) -> (S, S) {
        let (a, b) = self.mesh.element(e);
        let h = b - a;
        let phi = self.shape((x - a) / h);
        let dphi = self.shape_derivative(h);
        let mut v = S::zero();
        let mut d = S::zero();
        for (k, dof) in self.element_dofs(e).iter().enumerate() {
            if let Some(g) = dof {
                v += coeffs[*g] * phi[k];
                d += coeffs[*g] * dphi[k];
            }
        }
        (v, d)
    }

    /// Value and derivative of the expansion at `x`.
    pub fn eval(&self, coeffs: &[S], x: S) -> (S, S) {
        self.eval_on(coeffs, self.mesh.locate(x), x)
    }

    /// Values at `x` of all basis functions, as `(dof, value)` pairs.
    pub fn basis_at(&self, x: S) -> Vec<(usize, S)> {
        let e = self.mesh.locate(x);
        let (a, b) = self.mesh.element(e);
        let phi = self.shape((x - a) / (b - a));
        self.element_dofs(e)
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.map(|g| (g, phi[k])))
            .collect()
    }

    /// Degree-of-freedom coefficients of `f` obtained by nodal interpolation.
    pub fn interpolate(&self, f: impl Fn(S) -> S) -> Vec<S> {
        let mut c = vec![S::zero(); self.ndofs];
        for (dof, e, xi) in self.nodal_points() {
            let (a, b) = self.mesh.element(e);
            c[dof] = f(a + (b - a) * xi);
        }
        c
    }

    /// For every dof: an element in its support and the reference coordinate
    /// of its nodal point there.
    fn nodal_points(&self) -> Vec<(usize, usize, S)> {
        let mut seen = vec![false; self.ndofs];
        let mut out = Vec::with_capacity(self.ndofs);
        for e in 0..self.num_elements() {
            for (k, dof) in self.element_dofs(e).iter().enumerate() {
                if let Some(g) = *dof {
                    if !seen[g] {
                        seen[g] = true;
                        let xi = match self.spec.family {
                            BasisFamily::DiscontinuousP0 => S::lit(0.5),
                            _ => S::from_count(k),
                        };
                        out.push((g, e, xi));
                    }
                }
            }
        }
        out
    }

    /// Values at `x ∈ [a_e, b_e]` of all basis functions, evaluated on element `e`.
    fn basis_on(&self, e: usize, x: S) -> Vec<(usize, S, S)> {
        let (a, b) = self.mesh.element(e);
        let h = b - a;
        let phi = self.shape((x - a) / h);
        let dphi = self.shape_derivative(h);
        self.element_dofs(e)
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.map(|g| (g, phi[k], dphi[k])))
            .collect()
    }
}

/// Merged breakpoints of two meshes of the same interval.
fn merged_breakpoints<S: Scalar>(a: &Mesh1D<S>, b: &Mesh1D<S>) -> Result<Vec<S>> {
    let tol = S::lit(1e-12) * (a.end() - a.start()).abs();
    if (a.start() - b.start()).abs() > tol || (a.end() - b.end()).abs() > tol {
        return Err(Error::InvalidMesh("meshes cover different intervals".into()));
    }
    let mut pts: Vec<S> = a.points().iter().chain(b.points()).copied().collect();
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    let mut out: Vec<S> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().is_none_or(|&q| p - q > tol) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Assembles `∫ D^a φ_j D^b ψ_i` with rows indexed by the `test` basis `ψ`
/// and columns by the `trial` basis `φ`, integrating exactly over the merged
/// partition of both meshes.
pub fn assemble_bilinear<S: Scalar>(
    test: &FeSpace1D<S>,
    trial: &FeSpace1D<S>,
    derive_test: bool,
    derive_trial: bool,
) -> Result<SparseMatrix<S>> {
    let pts = merged_breakpoints(test.mesh(), trial.mesh())?;
    let quad = QuadratureRule::<S>::gauss(2)?;
    let mut trip = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = S::lit(0.5) * (a + b);
        let et = test.mesh().locate(mid);
        let es = trial.mesh().locate(mid);
        for (&p, &wt) in quad.points.iter().zip(&quad.weights) {
            let x = a + (b - a) * p;
            let weight = wt * (b - a);
            let tv = test.basis_on(et, x);
            let sv = trial.basis_on(es, x);
            for &(i, vi, di) in &tv {
                let fi = if derive_test { di } else { vi };
                for &(j, vj, dj) in &sv {
                    let fj = if derive_trial { dj } else { vj };
                    trip.push((i, j, weight * fi * fj));
                }
            }
        }
    }
    SparseMatrix::from_triplets(test.ndofs(), trial.ndofs(), &trip)
}

/// Moments `∫ f ψ_i` against the basis of `space`, by `nq`-point Gauss per element.
pub fn assemble_load<S: Scalar>(space: &FeSpace1D<S>, f: impl Fn(S) -> S, nq: usize) -> Result<Vec<S>> {
    let quad = QuadratureRule::<S>::gauss(nq)?;
    let mut out = vec![S::zero(); space.ndofs()];
    for e in 0..space.num_elements() {
        let (a, b) = space.mesh().element(e);
        for (&p, &wt) in quad.points.iter().zip(&quad.weights) {
            let x = a + (b - a) * p;
            let fx = f(x) * wt * (b - a);
            for (g, v, _) in space.basis_on(e, x) {
                out[g] += fx * v;
            }
        }
    }
    Ok(out)
}

/// Nodal interpolation from `src` into `dst`, exact whenever the `src`
/// space is contained in `dst` (every `dst` element inside one `src` element).
pub fn interpolation_matrix<S: Scalar>(src: &FeSpace1D<S>, dst: &FeSpace1D<S>) -> Result<SparseMatrix<S>> {
    merged_breakpoints(src.mesh(), dst.mesh())?;
    let tol = S::lit(1e-12) * (dst.mesh().end() - dst.mesh().start());
    let mut trip = Vec::new();
    for (dof, e, xi) in dst.nodal_points() {
        let (a, b) = dst.mesh().element(e);
        let es = src.mesh().locate(S::lit(0.5) * (a + b));
        let (sa, sb) = src.mesh().element(es);
        if a < sa - tol || b > sb + tol {
            return Err(Error::NotNested);
        }
        let x = a + (b - a) * xi;
        for (g, v, _) in src.basis_on(es, x) {
            if v != S::zero() {
                trip.push((dof, g, v));
            }
        }
    }
    SparseMatrix::from_triplets(dst.ndofs(), src.ndofs(), &trip)
}

/// Largest relative L2 projection residual of the `inner` basis functions
/// onto the span of the `outer` basis. The residual function is integrated
/// pointwise over the merged partition, so exact containment gives round-off.
pub fn containment_residual<S: Scalar>(inner: &FeSpace1D<S>, outer: &FeSpace1D<S>) -> Result<S> {
    let pts = merged_breakpoints(inner.mesh(), outer.mesh())?;
    let quad = QuadratureRule::<S>::gauss(3)?;
    let m_out = assemble_bilinear(outer, outer, false, false)?;
    let c = assemble_bilinear(outer, inner, false, false)?;
    let f = SpdFactorization::new(&m_out)?;
    let mut worst = S::zero();
    for j in 0..inner.ndofs() {
        let mut ej = vec![S::zero(); inner.ndofs()];
        ej[j] = S::one();
        let p = f.solve(&c.mul_vec(&ej));
        let (mut res, mut full) = (S::zero(), S::zero());
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = S::lit(0.5) * (a + b);
            let (ei, eo) = (inner.mesh().locate(mid), outer.mesh().locate(mid));
            res += quad.integrate(a, b, |x| {
                let d = inner.eval_on(&ej, ei, x).0 - outer.eval_on(&p, eo, x).0;
                d * d
            });
            full += quad.integrate(a, b, |x| inner.eval_on(&ej, ei, x).0.powi(2));
        }
        worst = worst.max((res / full).sqrt());
    }
    Ok(worst)
}

/// Which endpoint of the time interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeEnd {
    Start,
    Final,
}

/// Tensor-product trial space `X_t ⊗ X_x` and test space `Y_t ⊗ Y_x` with
/// all assembled one-dimensional factors.
///
/// Coefficients are stored time-major: index `i * n_space + j`.
#[derive(Debug, Clone)]
pub struct TensorSpacePair<S> {
    pub x_t: FeSpace1D<S>,
    pub y_t: FeSpace1D<S>,
    pub x_x: FeSpace1D<S>,
    pub y_x: FeSpace1D<S>,
    /// Mass on `X_t`.
    pub mt_x: SparseMatrix<S>,
    /// Stiffness on `X_t`.
    pub at_x: SparseMatrix<S>,
    /// Mass on `Y_t`.
    pub mt_y: SparseMatrix<S>,
    /// `∫ φ_j' ψ_i` for `φ_j ∈ X_t`, `ψ_i ∈ Y_t`.
    pub bt: SparseMatrix<S>,
    /// `∫ φ_j ψ_i` for `φ_j ∈ X_t`, `ψ_i ∈ Y_t`.
    pub ct: SparseMatrix<S>,
    /// Mass on `X_x`.
    pub mx: SparseMatrix<S>,
    /// Stiffness on `X_x`.
    pub ax: SparseMatrix<S>,
    /// Mass on `Y_x`.
    pub my_x: SparseMatrix<S>,
    /// Stiffness on `Y_x`.
    pub ay_x: SparseMatrix<S>,
    /// `∫ φ_j ψ_i` for `φ_j ∈ X_x`, `ψ_i ∈ Y_x`.
    pub cx: SparseMatrix<S>,
    /// Values of the `X_t` basis at `t = 0`.
    pub e0: Vec<S>,
    /// Values of the `X_t` basis at `t = T`.
    pub e_final: Vec<S>,
    /// Whether `X ⊆ Y`.
    pub x_in_y: bool,
    /// `(d_t u)(v)` as a `Y × X` matrix: `bt ⊗ cx`.
    pub d: SparseMatrix<S>,
    /// `⟨γ_T u, γ_T v⟩_H` as an `X × X` matrix.
    pub gamma_final: SparseMatrix<S>,
    embed: Option<SparseMatrix<S>>,
}

/// Tensor pair with `Y_x = X_x`.
pub fn assemble_matrices<S: Scalar>(
    x_t: (Mesh1D<S>, BasisSpec),
    y_t: (Mesh1D<S>, BasisSpec),
    x_x: (Mesh1D<S>, BasisSpec),
) -> Result<TensorSpacePair<S>> {
    TensorSpacePair::new(x_t, y_t, x_x.clone(), x_x)
}

impl<S: Scalar> TensorSpacePair<S> {
    /// Assembles a pair with independent spatial test factor `Y_x ⊇ X_x`.
    pub fn new(
        x_t: (Mesh1D<S>, BasisSpec),
        y_t: (Mesh1D<S>, BasisSpec),
        x_x: (Mesh1D<S>, BasisSpec),
        y_x: (Mesh1D<S>, BasisSpec),
    ) -> Result<Self> {
        if x_t.1.family != BasisFamily::ContinuousP1 || x_t.1.boundary != Boundary::Free {
            return Err(Error::UnsupportedBasis("temporal trial basis must be continuous P1 without constraints".into()));
        }
        if y_t.1.boundary != Boundary::Free {
            return Err(Error::UnsupportedBasis("temporal test basis must be unconstrained".into()));
        }
        for s in [&x_x.1, &y_x.1] {
            if *s != BasisSpec::CG1_DIRICHLET {
                return Err(Error::UnsupportedBasis("spatial bases must be continuous P1 with zero Dirichlet values".into()));
            }
        }
        let x_t = FeSpace1D::new(x_t.0, x_t.1)?;
        let y_t = FeSpace1D::new(y_t.0, y_t.1)?;
        let x_x = FeSpace1D::new(x_x.0, x_x.1)?;
        let y_x = FeSpace1D::new(y_x.0, y_x.1)?;
        let mt_x = assemble_bilinear(&x_t, &x_t, false, false)?;
        let at_x = assemble_bilinear(&x_t, &x_t, true, true)?;
        let mt_y = assemble_bilinear(&y_t, &y_t, false, false)?;
        let bt = assemble_bilinear(&y_t, &x_t, false, true)?;
        let ct = assemble_bilinear(&y_t, &x_t, false, false)?;
        let mx = assemble_bilinear(&x_x, &x_x, false, false)?;
        let ax = assemble_bilinear(&x_x, &x_x, true, true)?;
        let my_x = assemble_bilinear(&y_x, &y_x, false, false)?;
        let ay_x = assemble_bilinear(&y_x, &y_x, true, true)?;
        let cx = assemble_bilinear(&y_x, &x_x, false, false)?;
        let mut e0 = vec![S::zero(); x_t.ndofs()];
        let mut e_final = vec![S::zero(); x_t.ndofs()];
        e0[0] = S::one();
        e_final[x_t.ndofs() - 1] = S::one();
        let tol = S::lit(1e-12);
        let x_in_y = containment_residual(&x_t, &y_t)? <= tol && containment_residual(&x_x, &y_x)? <= tol;
        let embed = if x_in_y {
            let pt = interpolation_matrix(&x_t, &y_t)?;
            let px = interpolation_matrix(&x_x, &y_x)?;
            Some(SparseMatrix::kron(&pt, &px))
        } else {
            None
        };
        let d = SparseMatrix::kron(&bt, &cx);
        let eet = SparseMatrix::from_triplets(x_t.ndofs(), x_t.ndofs(), &[(x_t.ndofs() - 1, x_t.ndofs() - 1, S::one())])?;
        let gamma_final = SparseMatrix::kron(&eet, &mx);
        Ok(Self {
            x_t,
            y_t,
            x_x,
            y_x,
            mt_x,
            at_x,
            mt_y,
            bt,
            ct,
            mx,
            ax,
            my_x,
            ay_x,
            cx,
            e0,
            e_final,
            x_in_y,
            d,
            gamma_final,
            embed,
        })
    }

    /// Default pairing on uniform meshes: continuous P1 trial and
    /// discontinuous P1 test in time, continuous P1 in space.
    pub fn uniform_default(t_final: S, nt: usize, nx: usize) -> Result<Self> {
        let tm = Mesh1D::uniform(S::zero(), t_final, nt)?;
        let xm = Mesh1D::uniform(S::zero(), S::one(), nx)?;
        assemble_matrices((tm.clone(), BasisSpec::CG1), (tm, BasisSpec::DG1), (xm, BasisSpec::CG1_DIRICHLET))
    }

    /// The same trial space with the test meshes refined `kt` times in time
    /// and `kx` times in space.
    pub fn with_refined_test(&self, kt: usize, kx: usize) -> Result<Self> {
        Self::new(
            (self.x_t.mesh().clone(), self.x_t.spec()),
            (self.y_t.mesh().refined(kt), self.y_t.spec()),
            (self.x_x.mesh().clone(), self.x_x.spec()),
            (self.y_x.mesh().refined(kx), self.y_x.spec()),
        )
    }

    /// Both trial and test meshes refined `k` times.
    pub fn refined(&self, k: usize) -> Result<Self> {
        Self::new(
            (self.x_t.mesh().refined(k), self.x_t.spec()),
            (self.y_t.mesh().refined(k), self.y_t.spec()),
            (self.x_x.mesh().refined(k), self.x_x.spec()),
            (self.y_x.mesh().refined(k), self.y_x.spec()),
        )
    }

    pub fn t_final(&self) -> S {
        self.x_t.mesh().end()
    }

    pub fn nt_x(&self) -> usize {
        self.x_t.ndofs()
    }

    pub fn nt_y(&self) -> usize {
        self.y_t.ndofs()
    }

    /// Spatial dimension of the trial space.
    pub fn nx(&self) -> usize {
        self.x_x.ndofs()
    }

    /// Spatial dimension of the test space.
    pub fn ny_x(&self) -> usize {
        self.y_x.ndofs()
    }

    pub fn dim_x(&self) -> usize {
        self.nt_x() * self.nx()
    }

    pub fn dim_y(&self) -> usize {
        self.nt_y() * self.ny_x()
    }

    pub fn has_equal_spatial_factors(&self) -> bool {
        self.x_x == self.y_x
    }

    /// Spatial coefficients of `u(t, ·)` at `t = 0` or `t = T`.
    pub fn trace_at_time(&self, u: &[S], end: TimeEnd) -> Vec<S> {
        let e = match end {
            TimeEnd::Start => &self.e0,
            TimeEnd::Final => &self.e_final,
        };
        let nx = self.nx();
        let mut out = vec![S::zero(); nx];
        for (i, &w) in e.iter().enumerate() {
            if w != S::zero() {
                crate::linalg::axpy(w, &u[i * nx..(i + 1) * nx], &mut out);
            }
        }
        out
    }

    /// Adjoint of [`TensorSpacePair::trace_at_time`]: lifts spatial moments to `X`.
    pub fn trace_adjoint(&self, moments: &[S], end: TimeEnd) -> Vec<S> {
        let e = match end {
            TimeEnd::Start => &self.e0,
            TimeEnd::Final => &self.e_final,
        };
        let nx = self.nx();
        let mut out = vec![S::zero(); self.dim_x()];
        for (i, &w) in e.iter().enumerate() {
            for j in 0..nx {
                out[i * nx + j] = w * moments[j];
            }
        }
        out
    }

    /// Coefficients in `Y` of a function given by its `X` coefficients.
    pub fn embed_x_into_y(&self, u: &[S]) -> Result<Vec<S>> {
        match &self.embed {
            Some(e) => Ok(e.mul_vec(u)),
            None => Err(Error::NotNested),
        }
    }

    /// The embedding `X → Y` as a sparse matrix, when `X ⊆ Y`.
    pub fn embedding(&self) -> Option<&SparseMatrix<S>> {
        self.embed.as_ref()
    }

    /// `∫ φ_j' φ_i` on `X_t`.
    pub fn temporal_derivative_on_x(&self) -> Result<SparseMatrix<S>> {
        assemble_bilinear(&self.x_t, &self.x_t, false, true)
    }

    /// Evaluates an `X` coefficient vector at `(t, x)`.
    pub fn eval_x(&self, u: &[S], t: S, x: S) -> S {
        eval_tensor(&self.x_t, &self.x_x, u, t, x)
    }

    /// Evaluates a `Y` coefficient vector at `(t, x)`.
    pub fn eval_y(&self, v: &[S], t: S, x: S) -> S {
        eval_tensor(&self.y_t, &self.y_x, v, t, x)
    }

    /// Interpolates `f(t, x)` into `X`.
    pub fn interpolate_x(&self, f: impl Fn(S, S) -> S) -> Vec<S> {
        interpolate_tensor(&self.x_t, &self.x_x, f)
    }
}

pub(crate) fn eval_tensor<S: Scalar>(ts: &FeSpace1D<S>, xs: &FeSpace1D<S>, c: &[S], t: S, x: S) -> S {
    let nx = xs.ndofs();
    let bt = ts.basis_at(t);
    let bx = xs.basis_at(x);
    let mut v = S::zero();
    for &(i, a) in &bt {
        for &(j, b) in &bx {
            v += a * b * c[i * nx + j];
        }
    }
    v
}

pub(crate) fn interpolate_tensor<S: Scalar>(ts: &FeSpace1D<S>, xs: &FeSpace1D<S>, f: impl Fn(S, S) -> S) -> Vec<S> {
    let nx = xs.ndofs();
    let mut out = vec![S::zero(); ts.ndofs() * nx];
    let tp = ts.nodal_points();
    let xp = xs.nodal_points();
    for &(i, et, xi_t) in &tp {
        let (a, b) = ts.mesh().element(et);
        let t = a + (b - a) * xi_t;
        for &(j, ex, xi_x) in &xp {
            let (c, d) = xs.mesh().element(ex);
            out[i * nx + j] = f(t, c + (d - c) * xi_x);
        }
    }
    out
}

/// Prolongation `kron(P_t, P_x)` from the tensor space `(ts_c, xs_c)` into `(ts_f, xs_f)`.
pub fn tensor_interpolation<S: Scalar>(
    ts_c: &FeSpace1D<S>,
    xs_c: &FeSpace1D<S>,
    ts_f: &FeSpace1D<S>,
    xs_f: &FeSpace1D<S>,
) -> Result<SparseMatrix<S>> {
    Ok(SparseMatrix::kron(&interpolation_matrix(ts_c, ts_f)?, &interpolation_matrix(xs_c, xs_f)?))
}

/// Dense copy of a sparse matrix, convenient for small oracles.
pub fn dense<S: Scalar>(m: &SparseMatrix<S>) -> DenseMatrix<S> {
    m.to_dense()
}
