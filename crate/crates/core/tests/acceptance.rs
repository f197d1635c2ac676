//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use parabolic_uzawa::linalg::{dot, DenseMatrix, EigenOptions};
use parabolic_uzawa::monotone::{constants_from_mu, newton_solve, zarantonello_observed, GalerkinOperator, MuCoefficient, Side};
use parabolic_uzawa::precond::{check_spectral_inequality, kappa_study, SpatialRefinement, WaveletKind};
use parabolic_uzawa::quality::{convergence_study, efficiency_reliability, enrich_until_pjotr, fitted_rate, gamma_x_sequence, infsup_report, lambda_gap, FineReference};
use parabolic_uzawa::riesz::RieszContext;
use parabolic_uzawa::rng::SeededRng;
use parabolic_uzawa::spaces::TensorSpacePair;
use parabolic_uzawa::system::{assemble_rhs, derive_constants, ConstantsBundle, InnerSolve, ProblemData, ReferenceOptions, Rhs, SaddleState, SaddleSystem};
use parabolic_uzawa::uzawa::{perturbation_band, run_inexact_uzawa, UzawaConfig};

const CONSTANTS_REL_TOL: f64 = 1e-14;
const OPERATOR_SLACK: f64 = 1e-10;
const CONTRACTION_REL_TOL: f64 = 1e-12;
/// Errors below this fraction of the initial error are round-off dominated.
const CONTRACTION_FLOOR: f64 = 1e-9;
const ENVELOPE_ABS_TOL: f64 = 1e-9;
const UZAWA_OUTER_STEPS: usize = 400;
const BAND_ABS_TOL: f64 = 1e-9;
const IDENTITY_REL_TOL: f64 = 1e-10;
const GAMMA_T_TOL: f64 = 1e-8;
const GAMMA_X_MIN: f64 = 0.5;
/// `gamma_x` on 4, 8, ..., 64 spatial elements with 3 reference refinements.
const GAMMA_X_REGRESSION: [f64; 5] = [0.8766268625627094, 0.8766268625627095, 0.876626862562709, 0.8761640333344679, 0.8761374747446192];
const GAMMA_X_REGRESSION_TOL: f64 = 1e-8;
const GAMMA_DIRECT_TOL: f64 = 1e-8;
const MIN_RATE: f64 = 0.9;
const SURROGATE_SLACK: f64 = 1.05;
const PJOTR_MAX_LEVEL: usize = 4;
const KAPPA_SPREAD_MAX: f64 = 2.0;
const MARGIN_ABS_TOL: f64 = 1e-10;
const TIME_BUDGET_SECS: f64 = 60.0;

fn both_mu() -> [MuCoefficient<f64>; 2] {
    [MuCoefficient::constant(1.0).unwrap(), MuCoefficient::one_plus_inv()]
}

fn problems() -> [(&'static str, ProblemData<f64>, MuCoefficient<f64>); 2] {
    let mu = MuCoefficient::one_plus_inv();
    [("heat", ProblemData::heat(), MuCoefficient::constant(1.0).unwrap()), ("quasilinear", ProblemData::decay(mu.clone()), mu)]
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn solved(pair: &TensorSpacePair<f64>, data: &ProblemData<f64>, mu: &MuCoefficient<f64>) -> (SaddleSystem<f64>, Rhs<f64>, RieszContext<f64>, SaddleState<f64>) {
    let sys = SaddleSystem::new(pair, mu).unwrap();
    let rhs = assemble_rhs(data, pair).unwrap();
    let ctx = RieszContext::new(pair).unwrap();
    let state = sys.solve_reference(&rhs, &ctx, &ReferenceOptions::default()).unwrap();
    (sys, rhs, ctx, state)
}

/// Constants recomputed from their closed forms.
fn constants_oracle(l_a: f64, m_a: f64) -> [f64; 6] {
    let m_s = if m_a >= 1.0 { (m_a / (l_a * l_a)).min(1.0) } else { (m_a / (l_a * l_a)).min(m_a) };
    let l_s = [1.0, l_a, 1.0 / m_a].into_iter().fold(f64::MIN, f64::max);
    let l_beinv = (1.0 + 1.0 / m_a) / m_s;
    let l_ninv = 1.0 / m_a + if m_a < 1.0 { l_beinv / m_a } else { l_beinv };
    let c_1 = 1.0 + (1.0 + ((1.0 + l_a * l_a) * (1.0 + 1.0 / (m_a * m_a))).sqrt()) / m_s;
    [l_a + 1.0, l_s, m_s, l_beinv, l_ninv, c_1]
}

fn c1_constants() -> (bool, String) {
    let mut rng = SeededRng::new(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m_a = 10f64.powf(rng.uniform_in(-2.0, 2.0));
        let l_a = m_a * 10f64.powf(rng.uniform_in(0.0, 2.0));
        let b = derive_constants(l_a, m_a).unwrap();
        let got = [b.l_n, b.l_s, b.m_s, b.l_beinv, b.l_ninv, b.c_1];
        for (g, w) in got.iter().zip(constants_oracle(l_a, m_a)) {
            worst = worst.max(rel(*g, w));
        }
    }
    (worst <= CONSTANTS_REL_TOL, format!("100 pairs, max rel dev {worst:.2e} (tol {CONSTANTS_REL_TOL:.0e})"))
}

fn c2_operator_bounds() -> (bool, String) {
    let pair = TensorSpacePair::uniform_default(1.0, 8, 8).unwrap();
    let ctx = RieszContext::new(&pair).unwrap();
    let mut violations = 0usize;
    let mut constants_ok = true;
    for (k, mu) in both_mu().into_iter().enumerate() {
        let c = constants_from_mu(&mu);
        constants_ok &= c.l == 3.0 * mu.big_m_mu() && c.m == mu.m_mu();
        let sys = SaddleSystem::new(&pair, &mu).unwrap();
        let b = sys.bundle;
        let mut rng = SeededRng::new(200 + k as u64);
        let rhs = Rhs { f: rng.normal_vec(pair.dim_y()), g: rng.normal_vec(pair.dim_x()) };
        let inner = InnerSolve::Newton { tol: 1e-14 };
        for _ in 0..50 {
            let (w, v): (Vec<f64>, Vec<f64>) = (rng.normal_vec(pair.dim_y()), rng.normal_vec(pair.dim_y()));
            let (dv, da) = (diff(&w, &v), diff(&sys.op_y.apply(&w), &sys.op_y.apply(&v)));
            let n = ctx.norm_y(&dv);
            violations += usize::from(dot(&da, &dv) < b.m_a * n * n * (1.0 - OPERATOR_SLACK));
            violations += usize::from(ctx.dual_norm_y(&da) > b.l_a * n * (1.0 + OPERATOR_SLACK));
            let (w, z): (Vec<f64>, Vec<f64>) = (rng.normal_vec(pair.dim_x()), rng.normal_vec(pair.dim_x()));
            let dz = diff(&w, &z);
            let ds = diff(&sys.apply_s(&w, &rhs, &ctx, inner).unwrap(), &sys.apply_s(&z, &rhs, &ctx, inner).unwrap());
            let n = ctx.norm_x_delta(&dz);
            violations += usize::from(dot(&ds, &dz) < b.m_s * n * n * (1.0 - OPERATOR_SLACK));
            violations += usize::from(ctx.dual_norm_x(&ds) > b.l_s * n * (1.0 + OPERATOR_SLACK));
        }
    }
    (violations == 0 && constants_ok, format!("8x8, 2 mu x 50 pairs x 4 inequalities, {violations} violations, constants (3M, m) {constants_ok}"))
}

fn c3_zarantonello() -> (bool, String) {
    let pair = TensorSpacePair::uniform_default(1.0, 8, 8).unwrap();
    let ctx = RieszContext::new(&pair).unwrap();
    let mut worst = 0.0f64;
    let mut pass = true;
    for (k, mu) in both_mu().into_iter().enumerate() {
        let c = constants_from_mu(&mu);
        let op = GalerkinOperator::for_pair(&pair, Side::Test, mu).unwrap();
        let mut rng = SeededRng::new(300 + k as u64);
        let b: Vec<f64> = rng.normal_vec(pair.dim_y());
        let exact = newton_solve(&op, &b, &vec![0.0; op.dim()], 1e-14, 200).unwrap();
        for _ in 0..20 {
            let x0: Vec<f64> = rng.normal_vec::<f64>(op.dim()).into_iter().map(|v| v * 5.0).collect();
            let mut errs = Vec::new();
            zarantonello_observed(&|x| op.apply(x), &|r| ctx.riesz_y_solve(r), &b, &x0, c.theta_star, 0.0, 60, &mut |_, x| errs.push(ctx.norm_y(&diff(x, &exact))));
            let floor = CONTRACTION_FLOOR * errs[0];
            for w in errs.windows(2).filter(|w| w[0] > floor) {
                let ratio = w[1] / w[0];
                worst = worst.max(ratio / c.sigma);
                pass &= ratio <= c.sigma * (1.0 + CONTRACTION_REL_TOL);
            }
        }
    }
    (pass, format!("2 mu x 20 starts, max ratio/sigma_A {worst:.6}"))
}

fn c4_envelope() -> (bool, String) {
    let pair = TensorSpacePair::uniform_default(1.0, 4, 4).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, data, mu) in problems() {
        let (sys, rhs, ctx, reference) = solved(&pair, &data, &mu);
        let cfg = UzawaConfig::theoretical(&sys.bundle, None, 1e-300, UZAWA_OUTER_STEPS).unwrap();
        let out = run_inexact_uzawa(&sys, &rhs, &ctx, &cfg, &SaddleState::zeros(&pair), Some(&reference)).unwrap();
        let (vu, vl) = out.trace.envelope_violation(cfg.sigma_hat_s, cfg.c_3).unwrap();
        pass &= vu <= ENVELOPE_ABS_TOL && vl <= ENVELOPE_ABS_TOL && out.trace.len() == UZAWA_OUTER_STEPS + 1;
        parts.push(format!("{name}: L={} {} steps, worst margins u {vu:.2e} lambda {vl:.2e}", cfg.inner_steps, out.trace.len()));
    }
    (pass, parts.join("; "))
}

fn c5_band() -> (bool, String) {
    let pair = TensorSpacePair::uniform_default(1.0, 4, 4).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (name, data, mu)) in problems().into_iter().enumerate() {
        let (sys, rhs, ctx, reference) = solved(&pair, &data, &mu);
        let samples = perturbation_band(&sys, &rhs, &ctx, &reference, 50, &mut SeededRng::new(500 + k as u64));
        let (lo, hi) = (1.0 / sys.bundle.l_n, sys.bundle.l_ninv);
        let min = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
        let max = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        pass &= min >= lo - BAND_ABS_TOL && max <= hi + BAND_ABS_TOL;
        parts.push(format!("{name}: ratio in [{min:.4}, {max:.4}] within [{lo:.4}, {hi:.4}]"));
    }
    (pass, parts.join("; "))
}

fn c6_identities() -> (bool, String) {
    let mut worst = (0.0f64, 0.0f64);
    for n in [4, 8, 16] {
        let pair = TensorSpacePair::uniform_default(1.0, n, n).unwrap();
        let ctx = RieszContext::new(&pair).unwrap();
        let mut rng = SeededRng::new(600 + n as u64);
        for _ in 0..50 {
            let (w, v): (Vec<f64>, Vec<f64>) = (rng.normal_vec(pair.dim_x()), rng.normal_vec(pair.dim_x()));
            let (lhs, rhs) = ctx.check_trace_identity(&w, &v).unwrap();
            worst.0 = worst.0.max((lhs - rhs).abs() / (ctx.norm_x_delta(&w) * ctx.norm_x_delta(&v)));
            let (a, b) = ctx.check_infsup_identity(&w).unwrap();
            worst.1 = worst.1.max(rel(b, a));
        }
    }
    (worst.0 <= IDENTITY_REL_TOL && worst.1 <= IDENTITY_REL_TOL, format!("n = 4, 8, 16 x 50 functions, trace {:.2e}, inf-sup {:.2e}", worst.0, worst.1))
}

fn c7_infsup() -> (bool, String) {
    let mut pass = true;
    let mut worst_t = 0.0f64;
    for n in [4, 8, 16, 32, 64] {
        let r = infsup_report::<f64>(&TensorSpacePair::uniform_default(1.0, n, n).unwrap(), 3, false).unwrap();
        worst_t = worst_t.max((r.gamma_t - 1.0).abs());
    }
    pass &= worst_t <= GAMMA_T_TOL;
    let gx: Vec<f64> = gamma_x_sequence(4, 5, 3).unwrap();
    pass &= gx.iter().all(|&g| g >= GAMMA_X_MIN);
    let drift = gx.iter().zip(GAMMA_X_REGRESSION).map(|(a, b): (&f64, f64)| (a - b).abs()).fold(0.0, f64::max);
    pass &= drift <= GAMMA_X_REGRESSION_TOL;
    let r = infsup_report(&TensorSpacePair::uniform_default(1.0, 4, 4).unwrap(), 2, true).unwrap();
    let gd = r.gamma_direct.unwrap();
    pass &= gd >= r.gamma_t * r.gamma_x - GAMMA_DIRECT_TOL;
    (pass, format!("|gamma_t-1| {worst_t:.1e}, gamma_x {gx:?} (drift {drift:.1e}), gamma_direct {gd:.10} vs {:.10}", r.gamma_t * r.gamma_x))
}

fn c8_convergence() -> (bool, String) {
    let sizes = [4, 8, 16, 32];
    let rows = convergence_study(&ProblemData::heat(), &MuCoefficient::constant(1.0).unwrap(), 1.0, &sizes, 2, 1e-12).unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| r.err_x).collect();
    let rate = fitted_rate(&sizes, &errs);
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let quasi = rows.iter().all(|r| r.quasi_opt.ratio <= r.quasi_opt.bound);
    let apriori = rows.iter().all(|r| r.apriori.holds(SURROGATE_SLACK));
    let worst_q = rows.iter().map(|r| r.quasi_opt.ratio / r.quasi_opt.bound).fold(0.0, f64::max);
    let worst_a = rows.iter().map(|r| (r.apriori.error_lhs / r.apriori.error_bound).max(r.apriori.gap_lhs / r.apriori.gap_bound)).fold(0.0, f64::max);
    (
        decreasing && rate >= MIN_RATE && quasi && apriori,
        format!("err_X {errs:?}, rate {rate:.3}, max quasi-opt ratio/bound {worst_q:.3e}, max a priori lhs/bound {worst_a:.3e}"),
    )
}

fn c9_lambda_gap() -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, data, mu) in problems() {
        let gaps: Vec<f64> = [4, 8, 16, 32]
            .into_iter()
            .map(|n| {
                let pair = TensorSpacePair::uniform_default(1.0, n, n).unwrap();
                let (_, _, _, state) = solved(&pair, &data, &mu);
                lambda_gap(&pair, &state).unwrap()
            })
            .collect();
        pass &= gaps.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{name} {gaps:?}"));
    }
    (pass, parts.join("; "))
}

fn c10_pjotr() -> (bool, String) {
    let base = TensorSpacePair::uniform_default(1.0, 8, 8).unwrap();
    let (data, mu) = (ProblemData::heat(), MuCoefficient::constant(1.0).unwrap());
    let search = enrich_until_pjotr(&base, &data, &mu, 1.0, PJOTR_MAX_LEVEL, 1).unwrap();
    let terminated = search.report.satisfied && !search.report.degenerate && search.level <= PJOTR_MAX_LEVEL;
    let reference = FineReference::new(&search.pair, &data, &mu, 2, 1e-12).unwrap();
    let e = efficiency_reliability(&reference, &search.pair, &search.state, &data, &ConstantsBundle::from_mu(&mu), 1.0).unwrap();
    (
        terminated && e.holds(SURROGATE_SLACK),
        format!("level {}, lhs {:.3e} <= rhs {:.3e}, ratio {:.4} in [{:.4}, {:.4}]", search.level, search.report.lhs, search.report.rhs, e.ratio, e.lower, e.upper),
    )
}

fn dense_min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.min()
}

fn c11_preconditioner() -> (bool, String) {
    let opts = EigenOptions { tol: 1e-8, max_iter: 2000, seed: 11 };
    let rows = kappa_study(5, 1.0, SpatialRefinement::Fixed(32), WaveletKind::Lifted, &opts).unwrap();
    let kappas: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
    let spread = kappas.iter().copied().fold(0.0, f64::max) / kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rng = SeededRng::new(1100);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let n = 2 + (rng.uniform() * 10.0) as usize;
        let alpha = 10f64.powf(rng.uniform_in(-2.0, 2.0));
        let spd = |rng: &mut SeededRng| {
            let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
            g.transpose() * &g + DMatrix::identity(n, n) * 0.1
        };
        let (a, m) = (spd(&mut rng), spd(&mut rng));
        let got = check_spectral_inequality(&DenseMatrix::from_fn(n, n, |i, j| a[(i, j)]), &DenseMatrix::from_fn(n, n, |i, j| m[(i, j)]), alpha).unwrap();
        let ai = a.clone().try_inverse().unwrap();
        let u = &a + &m * &ai * &m * (alpha * alpha);
        let s = &a + &m * alpha;
        let w = &s * &ai * &s;
        let oracle_lower = dense_min_eig(&(&w - &u * 0.5));
        let oracle_upper = dense_min_eig(&(&u * 2.0 - &w));
        worst = worst.min(got.lower).min(got.upper_corrected).min(oracle_lower).min(oracle_upper);
    }
    (
        spread <= KAPPA_SPREAD_MAX && worst >= -MARGIN_ABS_TOL,
        format!("kappa {kappas:.3?} spread {spread:.3}; 50 SPD pairs, min margin {worst:.3e}"),
    )
}

fn main() -> ExitCode {
    type Criterion = fn() -> (bool, String);
    let criteria: [(&str, &str, Criterion); 11] = [
        ("C1", "constant calculus", c1_constants),
        ("C2", "discrete operator bounds", c2_operator_bounds),
        ("C3", "zarantonello contraction", c3_zarantonello),
        ("C4", "uzawa error envelope", c4_envelope),
        ("C5", "a posteriori band", c5_band),
        ("C6", "trace and inf-sup identities", c6_identities),
        ("C7", "inf-sup constants", c7_infsup),
        ("C8", "convergence and quasi-optimality", c8_convergence),
        ("C9", "lambda-u consistency", c9_lambda_gap),
        ("C10", "quasi-optimality test loop", c10_pjotr),
        ("C11", "preconditioner", c11_preconditioner),
    ];
    let mut failures = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = pass && secs <= TIME_BUDGET_SECS;
        failures += usize::from(!pass);
        println!("{} {id} {name}: {detail} [{secs:.2}s]", if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
