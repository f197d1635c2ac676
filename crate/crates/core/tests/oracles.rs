//! Library results against independent dense oracles built with nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use parabolic_uzawa::linalg::{
    condition_number_estimate, extremal_generalized_eigen, kron_apply, spd_solve, DenseMatrix, EigenOptions, KroneckerOperator, SparseMatrix,
    SpdFactorization, Which,
};
use parabolic_uzawa::monotone::{newton_solve, zarantonello_solve, GalerkinOperator, MuCoefficient, Side};
use parabolic_uzawa::precond::{assemble_rx_operator, check_spectral_inequality, BlockDiagPrecond, WaveletKind};
use parabolic_uzawa::quality::{gamma_t, gamma_x};
use parabolic_uzawa::riesz::{RieszContext, RxRoute};
use parabolic_uzawa::rng::SeededRng;
use parabolic_uzawa::spaces::{assemble_bilinear, containment_residual, interpolation_matrix, BasisSpec, FeSpace1D, Mesh1D, TensorSpacePair, TimeEnd};
use parabolic_uzawa::system::{assemble_rhs, ConstantsBundle, ProblemData, SaddleState, SaddleSystem};

fn na(d: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)])
}

fn nas(s: &SparseMatrix<f64>) -> DMatrix<f64> {
    na(&s.to_dense())
}

fn from_na(m: &DMatrix<f64>) -> SparseMatrix<f64> {
    let trip: Vec<_> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).filter(|&(i, j)| m[(i, j)] != 0.0).map(|(i, j)| (i, j, m[(i, j)])).collect();
    SparseMatrix::from_triplets(m.nrows(), m.ncols(), &trip).unwrap()
}

fn random_matrix(rng: &mut SeededRng, r: usize, c: usize) -> DMatrix<f64> {
    let v: Vec<f64> = (0..r * c).map(|_| rng.normal()).collect();
    DMatrix::from_row_slice(r, c, &v)
}

fn random_spd(rng: &mut SeededRng, n: usize, shift: f64) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n);
    g.transpose() * &g + DMatrix::identity(n, n) * shift
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

fn dense_sym_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Eigenvalues of the pencil `(A, B)` through `L⁻¹ A L⁻ᵀ` with `B = L Lᵀ`.
fn dense_pencil_eigs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let l = b.clone().cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let c = &li * a * li.transpose();
    dense_sym_eigs(&((&c + c.transpose()) * 0.5))
}

fn mesh(p: &[f64]) -> Mesh1D<f64> {
    Mesh1D::new(p.to_vec()).unwrap()
}

fn space(p: &[f64], spec: BasisSpec) -> FeSpace1D<f64> {
    FeSpace1D::new(mesh(p), spec).unwrap()
}

#[test]
fn spd_solve_multiply_back() {
    let mut rng = SeededRng::new(11);
    for n in [1, 5, 17, 64, 200] {
        // Banded SPD: random tridiagonal plus diagonal dominance.
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + rng.uniform()));
            if i + 1 < n {
                let off = rng.uniform_in(-1.0, 1.0);
                trip.push((i, i + 1, off));
                trip.push((i + 1, i, off));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &trip).unwrap();
        let b: Vec<f64> = rng.normal_vec(n);
        let x = spd_solve(&SpdFactorization::new(&a).unwrap(), &b).unwrap();
        assert!(rel_diff(&a.mul_vec(&x), &b) < 1e-12, "n = {n}");
    }
    for n in [5, 50] {
        let a = random_spd(&mut rng, n, 1.0);
        let b: Vec<f64> = rng.normal_vec(n);
        let x = SpdFactorization::new(&from_na(&a)).unwrap().solve(&b);
        let oracle = a.clone().cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
        assert!(rel_diff(&x, oracle.as_slice()) < 1e-10);
        assert!(rel_diff((&a * DVector::from_vec(x)).as_slice(), &b) < 1e-12);
    }
}

#[test]
fn kron_apply_matches_dense_kronecker() {
    let mut rng = SeededRng::new(12);
    for (ra, ca, rb, cb) in [(1, 1, 1, 1), (3, 3, 3, 3), (2, 5, 6, 1), (6, 6, 6, 6), (4, 2, 3, 6)] {
        let a = random_matrix(&mut rng, ra, ca);
        let b = random_matrix(&mut rng, rb, cb);
        let v: Vec<f64> = rng.normal_vec(ca * cb);
        let op = KroneckerOperator::new(from_na(&a), from_na(&b));
        let got = kron_apply(&op, &v).unwrap();
        let oracle = a.kronecker(&b) * DVector::from_vec(v.clone());
        assert!(rel_diff(&got, oracle.as_slice()) < 1e-13);
        let w: Vec<f64> = rng.normal_vec(ra * rb);
        let oracle_t = a.kronecker(&b).transpose() * DVector::from_vec(w.clone());
        assert!(rel_diff(&op.apply_transpose(&w).unwrap(), oracle_t.as_slice()) < 1e-13);
        assert!((nas(&SparseMatrix::kron(&from_na(&a), &from_na(&b))) - a.kronecker(&b)).abs().max() < 1e-14);
    }
}

#[test]
fn extremal_pencil_eigenvalues_match_dense_spectrum() {
    let mut rng = SeededRng::new(13);
    let opts = EigenOptions { tol: 1e-12, max_iter: 400, seed: 3 };
    for n in [2, 7, 20, 50] {
        let g = random_matrix(&mut rng, n, n);
        let a = (&g + g.transpose()) * 0.5;
        let b = random_spd(&mut rng, n, 0.5);
        let eigs = dense_pencil_eigs(&a, &b);
        let (sa, sb) = (from_na(&a), from_na(&b));
        let lo = extremal_generalized_eigen(&sa, &sb, Which::Smallest, None, &opts).unwrap();
        let hi = extremal_generalized_eigen(&sa, &sb, Which::Largest, None, &opts).unwrap();
        let scale = eigs[0].abs().max(eigs[n - 1].abs());
        assert!((lo.value - eigs[0]).abs() <= 1e-8 * scale, "n = {n}: {} vs {}", lo.value, eigs[0]);
        assert!((hi.value - eigs[n - 1]).abs() <= 1e-8 * scale, "n = {n}: {} vs {}", hi.value, eigs[n - 1]);
    }
}

#[test]
fn condition_number_matches_dense_pencil() {
    let mut rng = SeededRng::new(14);
    let opts = EigenOptions { tol: 1e-12, max_iter: 400, seed: 4 };
    for n in [3, 12, 40] {
        let a = random_spd(&mut rng, n, 1.0);
        let p = random_spd(&mut rng, n, 1.0);
        let pinv = p.clone().try_inverse().unwrap();
        let eigs = dense_pencil_eigs(&a, &p);
        let oracle = eigs[n - 1] / eigs[0];
        let k = condition_number_estimate(
            &|v: &[f64]| (&a * DVector::from_column_slice(v)).as_slice().to_vec(),
            &|v: &[f64]| (&pinv * DVector::from_column_slice(v)).as_slice().to_vec(),
            n,
            &opts,
        )
        .unwrap();
        assert!((k - oracle).abs() <= 1e-8 * oracle, "n = {n}: {k} vs {oracle}");
    }
}

#[test]
fn dense_eigensolvers_match_nalgebra() {
    let mut rng = SeededRng::new(15);
    for n in [1, 4, 30] {
        let g = random_matrix(&mut rng, n, n);
        let a = (&g + g.transpose()) * 0.5;
        let d = DenseMatrix::from_fn(n, n, |i, j| a[(i, j)]);
        let (vals, vecs) = d.symmetric_eigen().unwrap();
        let oracle = dense_sym_eigs(&a);
        for (v, o) in vals.iter().zip(&oracle) {
            assert!((v - o).abs() < 1e-11);
        }
        let q = na(&vecs);
        assert!((q.transpose() * &q - DMatrix::identity(n, n)).abs().max() < 1e-11);
        let b = random_spd(&mut rng, n, 0.5);
        let db = DenseMatrix::from_fn(n, n, |i, j| b[(i, j)]);
        let (gv, _) = DenseMatrix::generalized_symmetric_eigen(&d, &db).unwrap();
        for (v, o) in gv.iter().zip(dense_pencil_eigs(&a, &b)) {
            assert!((v - o).abs() < 1e-9 * o.abs().max(1.0));
        }
    }
}

/// Element matrices by hand: `h/6 [2 1; 1 2]`, `1/h [1 −1; −1 1]`, and for a
/// P1 test function against a P1 trial derivative `[−1 1; −1 1]/2`.
#[test]
fn assembled_matrices_match_hand_integration() {
    let pts = [0.0, 0.1, 0.45, 0.5, 1.0];
    let ne = pts.len() - 1;
    let cg = space(&pts, BasisSpec::CG1);
    let mut m = DMatrix::zeros(ne + 1, ne + 1);
    let mut a = DMatrix::zeros(ne + 1, ne + 1);
    let mut bdg = DMatrix::zeros(2 * ne, ne + 1);
    let mut cdg = DMatrix::zeros(2 * ne, ne + 1);
    let mut b0 = DMatrix::zeros(ne, ne + 1);
    for e in 0..ne {
        let h = pts[e + 1] - pts[e];
        for (p, q, mv) in [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)] {
            m[(e + p, e + q)] += h / 6.0 * mv;
            a[(e + p, e + q)] += if p == q { 1.0 / h } else { -1.0 / h };
            cdg[(2 * e + p, e + q)] += h / 6.0 * mv;
            bdg[(2 * e + p, e + q)] += if q == 0 { -0.5 } else { 0.5 };
        }
        b0[(e, e)] = -1.0;
        b0[(e, e + 1)] = 1.0;
    }
    let check = |got: &SparseMatrix<f64>, want: &DMatrix<f64>| assert!((nas(got) - want).abs().max() < 1e-14, "{}\n{}", nas(got), want);
    check(&assemble_bilinear(&cg, &cg, false, false).unwrap(), &m);
    check(&assemble_bilinear(&cg, &cg, true, true).unwrap(), &a);
    let dg1 = space(&pts, BasisSpec::DG1);
    check(&assemble_bilinear(&dg1, &cg, false, true).unwrap(), &bdg);
    check(&assemble_bilinear(&dg1, &cg, false, false).unwrap(), &cdg);
    check(&assemble_bilinear(&space(&pts, BasisSpec::DG0), &cg, false, true).unwrap(), &b0);
    // Dirichlet space drops the boundary rows and columns.
    let cgd = space(&pts, BasisSpec::CG1_DIRICHLET);
    check(&assemble_bilinear(&cgd, &cgd, true, true).unwrap(), &a.view((1, 1), (ne - 1, ne - 1)).into_owned());
    check(&assemble_bilinear(&cgd, &cgd, false, false).unwrap(), &m.view((1, 1), (ne - 1, ne - 1)).into_owned());
}

#[test]
fn single_hat_and_single_element_values() {
    let s = space(&[0.0, 0.5, 1.0], BasisSpec::CG1_DIRICHLET);
    assert!((assemble_bilinear(&s, &s, true, true).unwrap().get(0, 0) - 4.0).abs() < 1e-14);
    assert!((assemble_bilinear(&s, &s, false, false).unwrap().get(0, 0) - 1.0 / 3.0).abs() < 1e-14);
    let b = assemble_bilinear(&space(&[0.0, 1.0], BasisSpec::DG0), &space(&[0.0, 1.0], BasisSpec::CG1), false, true).unwrap();
    assert_eq!((b.get(0, 0), b.get(0, 1)), (-1.0, 1.0));
}

#[test]
fn nested_spaces_reproduce_coarse_functions() {
    let coarse_pts = [0.0, 0.3, 0.4, 1.0];
    for spec in [BasisSpec::CG1, BasisSpec::CG1_DIRICHLET, BasisSpec::DG1, BasisSpec::DG0] {
        let coarse = space(&coarse_pts, spec);
        let fine = FeSpace1D::new(mesh(&coarse_pts).refined(2), spec).unwrap();
        let r = containment_residual(&coarse, &fine).unwrap();
        assert!(r <= 1e-12, "{spec:?} {r}");
        let p = interpolation_matrix(&coarse, &fine).unwrap();
        let mut rng = SeededRng::new(16);
        let c: Vec<f64> = rng.normal_vec(coarse.ndofs());
        let f = p.mul_vec(&c);
        for k in 0..50 {
            let x = (k as f64 + 0.37) / 50.0;
            assert!((coarse.eval(&c, x).0 - fine.eval(&f, x).0).abs() < 1e-13);
        }
    }
    let fine = space(&[0.0, 0.5, 1.0], BasisSpec::CG1);
    assert!(containment_residual(&fine, &space(&[0.0, 1.0], BasisSpec::CG1)).unwrap() > 0.1);
}

#[test]
fn temporal_derivatives_lie_in_the_test_space() {
    let pts = [0.0, 0.2, 0.25, 0.7, 1.0];
    let x_t = space(&pts, BasisSpec::CG1);
    let mut rng = SeededRng::new(17);
    let u: Vec<f64> = rng.normal_vec(x_t.ndofs());
    for spec in [BasisSpec::DG0, BasisSpec::DG1] {
        let y_t = space(&pts, spec);
        let my = SpdFactorization::new(&assemble_bilinear(&y_t, &y_t, false, false).unwrap()).unwrap();
        let proj = my.solve(&assemble_bilinear(&y_t, &x_t, false, true).unwrap().mul_vec(&u));
        for e in 0..pts.len() - 1 {
            let slope = (u[e + 1] - u[e]) / (pts[e + 1] - pts[e]);
            for xi in [0.1, 0.5, 0.9] {
                let t = pts[e] + xi * (pts[e + 1] - pts[e]);
                assert!((y_t.eval(&proj, t).0 - slope).abs() < 1e-11 * slope.abs().max(1.0));
            }
        }
    }
}

#[test]
fn linear_operator_is_the_kronecker_stiffness() {
    let pair = TensorSpacePair::uniform_default(1.0, 3, 4).unwrap();
    let mu = MuCoefficient::constant(1.0).unwrap();
    let mut rng = SeededRng::new(18);
    for (side, mt, dim) in [(Side::Trial, &pair.mt_x, pair.dim_x()), (Side::Test, &pair.mt_y, pair.dim_y())] {
        let op = GalerkinOperator::for_pair(&pair, side, mu.clone()).unwrap();
        let k = nas(mt).kronecker(&nas(&pair.ax));
        let w: Vec<f64> = rng.normal_vec(dim);
        let oracle = &k * DVector::from_vec(w.clone());
        assert!(rel_diff(&op.apply(&w), oracle.as_slice()) < 1e-12);
        assert!((nas(&op.jacobian(&w)) - &k).abs().max() < 1e-12);
    }
    let op = GalerkinOperator::for_pair(&pair, Side::Test, MuCoefficient::constant(2.5).unwrap()).unwrap();
    let w: Vec<f64> = rng.normal_vec(pair.dim_y());
    let oracle = nas(&pair.mt_y).kronecker(&nas(&pair.ax)) * DVector::from_vec(w.clone()) * 2.5;
    assert!(rel_diff(&op.apply(&w), oracle.as_slice()) < 1e-12);
}

/// `R_X = M_t ⊗ A_x + e_T e_Tᵀ ⊗ M_x + Dᵀ (M_t^Y ⊗ A_y)⁻¹ D` assembled densely.
fn dense_rx(pair: &TensorSpacePair<f64>) -> DMatrix<f64> {
    let ry = nas(&pair.mt_y).kronecker(&nas(&pair.ay_x));
    let d = nas(&pair.d);
    let nt = pair.nt_x();
    let mut et = DMatrix::zeros(nt, nt);
    et[(nt - 1, nt - 1)] = 1.0;
    nas(&pair.mt_x).kronecker(&nas(&pair.ax)) + et.kronecker(&nas(&pair.mx)) + d.transpose() * ry.try_inverse().unwrap() * d
}

#[test]
fn trial_riesz_routes_match_dense_gram() {
    let mut rng = SeededRng::new(19);
    let x_mesh = mesh(&[0.0, 0.4, 0.7, 1.0]);
    let t_mesh = mesh(&[0.0, 0.3, 0.5, 1.0]);
    let equal = TensorSpacePair::uniform_default(1.0, 3, 3).unwrap();
    let skew = TensorSpacePair::new(
        (t_mesh.clone(), BasisSpec::CG1),
        (t_mesh.clone(), BasisSpec::DG1),
        (x_mesh.clone(), BasisSpec::CG1_DIRICHLET),
        (x_mesh.clone(), BasisSpec::CG1_DIRICHLET),
    )
    .unwrap();
    let richer = TensorSpacePair::new(
        (t_mesh.clone(), BasisSpec::CG1),
        (t_mesh, BasisSpec::DG1),
        (x_mesh.clone(), BasisSpec::CG1_DIRICHLET),
        (x_mesh.refined(1), BasisSpec::CG1_DIRICHLET),
    )
    .unwrap();
    for (pair, routes) in [
        (&equal, vec![RxRoute::FastDiagonalization, RxRoute::SaddleFactorization]),
        (&skew, vec![RxRoute::FastDiagonalization, RxRoute::SaddleFactorization]),
        (&richer, vec![RxRoute::SaddleFactorization]),
    ] {
        let rx = dense_rx(pair);
        let h: Vec<f64> = rng.normal_vec(pair.dim_x());
        let oracle = rx.clone().cholesky().unwrap().solve(&DVector::from_vec(h.clone()));
        for route in routes {
            let ctx = RieszContext::with_route(pair, route).unwrap();
            assert!(rel_diff(&ctx.riesz_x_solve(&h), oracle.as_slice()) < 1e-10, "{route:?}");
            assert!((na(&ctx.dense_rx()) - &rx).abs().max() < 1e-10 * rx.abs().max());
        }
    }
    assert!(RieszContext::with_route(&richer, RxRoute::FastDiagonalization).is_err());
}

#[test]
fn test_riesz_dual_norm_matches_dense_inverse() {
    let pair = TensorSpacePair::uniform_default(1.0, 2, 3).unwrap();
    let ctx = RieszContext::new(&pair).unwrap();
    let ry = nas(&pair.mt_y).kronecker(&nas(&pair.ay_x));
    let mut rng = SeededRng::new(20);
    let h: Vec<f64> = rng.normal_vec(pair.dim_y());
    let hv = DVector::from_vec(h.clone());
    let oracle = (hv.transpose() * ry.try_inverse().unwrap() * &hv)[(0, 0)].sqrt();
    assert!((ctx.dual_norm_y(&h) - oracle).abs() < 1e-12 * oracle);
}

#[test]
fn time_constant_functions_have_closed_form_norm() {
    let t_final = 2.0;
    let pair = TensorSpacePair::uniform_default(t_final, 4, 5).unwrap();
    let ctx = RieszContext::new(&pair).unwrap();
    let mut rng = SeededRng::new(21);
    let w: Vec<f64> = rng.normal_vec(pair.nx());
    let z: Vec<f64> = (0..pair.nt_x()).flat_map(|_| w.clone()).collect();
    let v2 = w.iter().zip(pair.ax.mul_vec(&w)).map(|(a, b)| a * b).sum::<f64>();
    let h2 = w.iter().zip(pair.mx.mul_vec(&w)).map(|(a, b)| a * b).sum::<f64>();
    let want = t_final * v2 + h2;
    assert!((ctx.norm_x_delta(&z).powi(2) - want).abs() < 1e-12 * want);
    let (lhs, rhs) = ctx.check_infsup_identity(&z).unwrap();
    assert!((lhs - want).abs() < 1e-12 * want && (rhs - want).abs() < 1e-10 * want);
}

#[test]
fn initial_value_moments_match_closed_form() {
    let (nt, nx) = (3, 6);
    let pair = TensorSpacePair::uniform_default(1.0, nt, nx).unwrap();
    let rhs = assemble_rhs(&ProblemData::heat(), &pair).unwrap();
    let pi = std::f64::consts::PI;
    let h = 1.0 / nx as f64;
    // ∫ sin(πx) φ_j = 2 (1 − cos πh) sin(π x_j) / (π² h) for the hat at x_j.
    for j in 0..nx - 1 {
        let xj = (j + 1) as f64 * h;
        let want = -2.0 * (1.0 - (pi * h).cos()) * (pi * xj).sin() / (pi * pi * h);
        assert!((rhs.g[j] - want).abs() < 1e-10, "{} vs {want}", rhs.g[j]);
    }
    assert!(rhs.g[nx - 1..].iter().all(|&v| v == 0.0));
    assert!(rhs.f.iter().all(|&v| v == 0.0));
}

#[test]
fn saddle_operator_matches_block_matrix_for_linear_case() {
    let pair = TensorSpacePair::uniform_default(1.0, 3, 3).unwrap();
    let sys = SaddleSystem::new(&pair, &MuCoefficient::constant(1.0).unwrap()).unwrap();
    let (ny, nx) = (pair.dim_y(), pair.dim_x());
    let ay = nas(&pair.mt_y).kronecker(&nas(&pair.ax));
    let nt = pair.nt_x();
    let mut et = DMatrix::zeros(nt, nt);
    et[(nt - 1, nt - 1)] = 1.0;
    let ax = nas(&pair.mt_x).kronecker(&nas(&pair.ax)) + et.kronecker(&nas(&pair.mx));
    let d = nas(&pair.d);
    let mut n = DMatrix::zeros(ny + nx, ny + nx);
    n.view_mut((0, 0), (ny, ny)).copy_from(&ay);
    n.view_mut((0, ny), (ny, nx)).copy_from(&d);
    n.view_mut((ny, 0), (nx, ny)).copy_from(&d.transpose());
    n.view_mut((ny, ny), (nx, nx)).copy_from(&(-ax));
    let mut rng = SeededRng::new(22);
    let state = SaddleState { lambda: rng.normal_vec(ny), u: rng.normal_vec(nx) };
    let v = DVector::from_iterator(ny + nx, state.lambda.iter().chain(&state.u).copied());
    let oracle = &n * v;
    let (a, b) = sys.apply_n(&state);
    let got: Vec<f64> = a.into_iter().chain(b).collect();
    assert!(rel_diff(&got, oracle.as_slice()) < 1e-12);
}

#[test]
fn newton_and_long_zarantonello_agree() {
    let pair = TensorSpacePair::uniform_default(1.0, 3, 4).unwrap();
    let mu = MuCoefficient::one_plus_inv();
    let op = GalerkinOperator::for_pair(&pair, Side::Test, mu.clone()).unwrap();
    let ctx = RieszContext::new(&pair).unwrap();
    let mut rng = SeededRng::new(23);
    let b: Vec<f64> = rng.normal_vec(pair.dim_y());
    let zero = vec![0.0; pair.dim_y()];
    let newton = newton_solve(&op, &b, &zero, 1e-13, 100).unwrap();
    let c = ConstantsBundle::from_mu(&mu).a_constants();
    let z = zarantonello_solve(&|x| op.apply(x), &|r| ctx.riesz_y_solve(r), &b, &zero, &c, 0.0, 10_000);
    let diff: Vec<f64> = newton.iter().zip(&z.x).map(|(a, b)| a - b).collect();
    assert!(ctx.norm_y(&diff) <= 1e-8 * ctx.norm_y(&newton).max(1.0));
}

/// Smallest singular value of `M_Y^{-1/2} C M_0^{-1/2}` with `C = ∫ ψ_i χ_j`
/// between the test basis and the piecewise constants on the trial mesh.
fn dense_gamma_t(x_pts: &[f64], y_t: &FeSpace1D<f64>) -> f64 {
    let p0 = space(x_pts, BasisSpec::DG0);
    let c = nas(&assemble_bilinear(y_t, &p0, false, false).unwrap());
    let ly = nas(&assemble_bilinear(y_t, y_t, false, false).unwrap()).cholesky().unwrap().l();
    let l0 = nas(&assemble_bilinear(&p0, &p0, false, false).unwrap()).cholesky().unwrap().l();
    let k = ly.try_inverse().unwrap() * c * l0.try_inverse().unwrap().transpose();
    if k.nrows() < k.ncols() {
        return 0.0;
    }
    k.singular_values().min()
}

#[test]
fn temporal_infsup_matches_dense_svd() {
    let coarse = [0.0, 0.3, 0.5, 1.0];
    let fine: Vec<f64> = mesh(&coarse).refined(1).points().to_vec();
    for spec in [BasisSpec::DG1, BasisSpec::DG0] {
        let y_t = space(&coarse, spec);
        let g = gamma_t(&space(&fine, BasisSpec::CG1), &y_t).unwrap();
        let oracle = dense_gamma_t(&fine, &y_t);
        assert!((g - oracle).abs() < 1e-10, "{spec:?}: {g} vs {oracle}");
        if spec == BasisSpec::DG1 {
            assert!(g > 0.0 && g < 1.0);
        }
        let same = gamma_t(&space(&coarse, BasisSpec::CG1), &y_t).unwrap();
        assert!((same - 1.0).abs() < 1e-10);
    }
}

/// `1/‖P‖` for the `L₂`-orthogonal projector `P` onto the coarse space,
/// measured in the energy norm of the fine space.
fn dense_gamma_x(coarse: &FeSpace1D<f64>, fine: &FeSpace1D<f64>) -> f64 {
    let i = nas(&interpolation_matrix(coarse, fine).unwrap());
    let mc = nas(&assemble_bilinear(coarse, coarse, false, false).unwrap());
    let mix = nas(&assemble_bilinear(coarse, fine, false, false).unwrap());
    let af = nas(&assemble_bilinear(fine, fine, true, true).unwrap());
    let p = i * mc.try_inverse().unwrap() * mix;
    let top = dense_pencil_eigs(&(p.transpose() * &af * &p), &af);
    1.0 / top.last().unwrap().sqrt()
}

#[test]
fn spatial_infsup_matches_dense_projector_norm() {
    for (pts, r) in [(vec![0.0, 0.5, 1.0], 2), (vec![0.0, 0.5, 1.0], 3), (vec![0.0, 0.2, 0.6, 1.0], 2), (vec![0.0, 0.25, 0.5, 0.75, 1.0], 1)] {
        let c = space(&pts, BasisSpec::CG1_DIRICHLET);
        let f = FeSpace1D::new(mesh(&pts).refined(r), BasisSpec::CG1_DIRICHLET).unwrap();
        let g = gamma_x(&c, &c, r).unwrap();
        let oracle = dense_gamma_x(&c, &f);
        assert!((g - oracle).abs() < 1e-10, "{pts:?}/{r}: {g} vs {oracle}");
    }
}

#[test]
fn spectral_margins_match_dense_formulas() {
    let mut rng = SeededRng::new(24);
    for (n, alpha) in [(3, 0.5), (6, 3.0), (10, 20.0)] {
        let a = random_spd(&mut rng, n, 0.3);
        let m = random_spd(&mut rng, n, 0.3);
        let ai = a.clone().try_inverse().unwrap();
        let u = &a + &m * &ai * &m * (alpha * alpha);
        let s = &a + &m * alpha;
        let w = &s * &ai * &s;
        let min = |x: DMatrix<f64>| dense_sym_eigs(&((&x + x.transpose()) * 0.5))[0];
        let da = DenseMatrix::from_fn(n, n, |i, j| a[(i, j)]);
        let dm = DenseMatrix::from_fn(n, n, |i, j| m[(i, j)]);
        let got = check_spectral_inequality(&da, &dm, alpha).unwrap();
        let scale = u.abs().max();
        assert!((got.lower - min(&w - &u * 0.5)).abs() < 1e-9 * scale);
        assert!((got.lower_tight - min(&w - &u)).abs() < 1e-9 * scale);
        assert!((got.upper_literal - min(&u - &w)).abs() < 1e-9 * scale);
        assert!((got.upper_corrected - min(&u * 2.0 - &w)).abs() < 1e-9 * scale);
    }
}

#[test]
fn alternative_norm_operator_matches_dense_formula() {
    let pair = TensorSpacePair::uniform_default(1.0, 4, 3).unwrap();
    let r = assemble_rx_operator(&pair).unwrap();
    let (mt, at, mx, ax) = (nas(&pair.mt_x), nas(&pair.at_x), nas(&pair.mx), nas(&pair.ax));
    let oracle = mt.kronecker(&ax) + (&mt + at).kronecker(&(&mx * ax.clone().try_inverse().unwrap() * &mx));
    assert!((na(&r.to_dense()) - oracle).abs().max() < 1e-12);
}

#[test]
fn preconditioner_matches_dense_block_formula() {
    let pair = TensorSpacePair::uniform_default(1.0, 4, 3).unwrap();
    let (mx, ax) = (nas(&pair.mx), nas(&pair.ax));
    let nx = pair.nx();
    for kind in [WaveletKind::Lifted, WaveletKind::Prewavelet] {
        let p = BlockDiagPrecond::for_pair_with(&pair, kind).unwrap();
        let t = nas(&p.basis.transform);
        let nw = t.ncols();
        let mut blocks = DMatrix::zeros(nw * nx, nw * nx);
        for (k, &alpha) in p.basis.alphas.iter().enumerate() {
            let ri = (&ax + &mx * alpha).try_inverse().unwrap();
            blocks.view_mut((k * nx, k * nx), (nx, nx)).copy_from(&(&ri * &ax * &ri));
        }
        let id = DMatrix::identity(nx, nx);
        let oracle = t.kronecker(&id) * blocks * t.transpose().kronecker(&id);
        let mut rng = SeededRng::new(25);
        let h: Vec<f64> = rng.normal_vec(pair.dim_x());
        let want = &oracle * DVector::from_vec(h.clone());
        assert!(rel_diff(&p.apply(&h), want.as_slice()) < 1e-12, "{kind:?}");
    }
}

#[test]
fn level_one_wavelets_reproduce_nodal_hats() {
    let m = mesh(&[0.0, 0.5, 1.0]);
    let b = parabolic_uzawa::precond::build_time_wavelets(&m).unwrap();
    let t = nas(&b.transform);
    assert_eq!(t.shape(), (3, 3));
    let ti = t.clone().try_inverse().unwrap();
    let sp = space(&[0.0, 0.5, 1.0], BasisSpec::CG1);
    // Hat k = Σ_w (T⁻¹)_{w k} ψ_w, compared pointwise.
    for k in 0..3 {
        let mut hat = vec![0.0; 3];
        hat[k] = 1.0;
        let coeffs = &t * ti.column(k);
        for q in 0..21 {
            let x = q as f64 / 20.0;
            assert!((sp.eval(coeffs.as_slice(), x).0 - sp.eval(&hat, x).0).abs() < 1e-13);
        }
    }
}

#[test]
fn traces_pick_the_end_values() {
    let pair = TensorSpacePair::uniform_default(1.0, 3, 4).unwrap();
    let u = pair.interpolate_x(|t, x| (1.0 + t) * x * (1.0 - x));
    let (u0, ut) = (pair.trace_at_time(&u, TimeEnd::Start), pair.trace_at_time(&u, TimeEnd::Final));
    for j in 0..pair.nx() {
        let x = (j + 1) as f64 / 4.0;
        assert!((u0[j] - pair.eval_x(&u, 0.0, x)).abs() < 1e-14);
        assert!((ut[j] - pair.eval_x(&u, 1.0, x)).abs() < 1e-14);
    }
}
