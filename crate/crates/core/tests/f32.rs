//! The library instantiated at `f32`, compared against the `f64` instance.

use parabolic_uzawa::monotone::{constants_from_mu, zarantonello_solve, GalerkinOperator, MuCoefficient, Side};
use parabolic_uzawa::riesz::RieszContext;
use parabolic_uzawa::spaces::TensorSpacePair;
use parabolic_uzawa::system::{assemble_rhs, derive_constants, ProblemData, SaddleState, SaddleSystem};
use parabolic_uzawa::uzawa::{run_inexact_uzawa, UzawaConfig};

fn pairs(nt: usize, nx: usize) -> (TensorSpacePair<f32>, TensorSpacePair<f64>) {
    (TensorSpacePair::uniform_default(1.0, nt, nx).unwrap(), TensorSpacePair::uniform_default(1.0, nt, nx).unwrap())
}

fn max_rel(a: &[f32], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn constants_agree_with_f64() {
    let a = derive_constants(6.0f32, 0.875).unwrap();
    let b = derive_constants(6.0f64, 0.875).unwrap();
    for (x, y) in [(a.l_s, b.l_s), (a.m_s, b.m_s), (a.l_ninv, b.l_ninv), (a.c_1, b.c_1)] {
        assert!(((x as f64 - y) / y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn assembly_matches_f64() {
    let (p32, p64) = pairs(3, 4);
    let mu32 = MuCoefficient::<f32>::one_plus_inv();
    let mu64 = MuCoefficient::<f64>::one_plus_inv();
    let op32 = GalerkinOperator::for_pair(&p32, Side::Test, mu32).unwrap();
    let op64 = GalerkinOperator::for_pair(&p64, Side::Test, mu64).unwrap();
    let w64: Vec<f64> = (0..op64.dim()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
    let w32: Vec<f32> = w64.iter().map(|&v| v as f32).collect();
    assert!(max_rel(&op32.apply(&w32), &op64.apply(&w64)) < 1e-5);
    let rhs32 = assemble_rhs(&ProblemData::<f32>::heat(), &p32).unwrap();
    let rhs64 = assemble_rhs(&ProblemData::<f64>::heat(), &p64).unwrap();
    assert!(max_rel(&rhs32.g, &rhs64.g) < 1e-5);
}

#[test]
fn riesz_round_trip() {
    let (p, _) = pairs(3, 4);
    let ctx = RieszContext::new(&p).unwrap();
    let v: Vec<f32> = (0..p.dim_y()).map(|i| (i as f32 * 0.37).sin()).collect();
    let back = ctx.riesz_y_solve(&ctx.riesz_y_apply(&v));
    let err = v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn zarantonello_reaches_single_precision() {
    let (p, _) = pairs(2, 3);
    let mu = MuCoefficient::<f32>::one_plus_inv();
    let c = constants_from_mu(&mu);
    let op = GalerkinOperator::for_pair(&p, Side::Test, mu).unwrap();
    let ctx = RieszContext::new(&p).unwrap();
    let b: Vec<f32> = (0..op.dim()).map(|i| 1.0 + i as f32 * 0.1).collect();
    let out = zarantonello_solve(&|x| op.apply(x), &|r| ctx.riesz_y_solve(r), &b, &vec![0.0; op.dim()], &c, 1e-4, 2000);
    assert!(out.converged);
    let r: Vec<f32> = op.apply(&out.x).iter().zip(&b).map(|(a, b)| a - b).collect();
    assert!(ctx.dual_norm_y(&r) < 1e-3 * ctx.dual_norm_y(&b));
}

#[test]
fn uzawa_estimate_decreases() {
    let (p, _) = pairs(2, 3);
    let sys = SaddleSystem::new(&p, &MuCoefficient::<f32>::constant(1.0).unwrap()).unwrap();
    let ctx = RieszContext::new(&p).unwrap();
    let rhs = assemble_rhs(&ProblemData::<f32>::heat(), &p).unwrap();
    let cfg = UzawaConfig::theoretical(&sys.bundle, None, 1e-30, 40).unwrap();
    let out = run_inexact_uzawa(&sys, &rhs, &ctx, &cfg, &SaddleState::zeros(&p), None).unwrap();
    let eta: Vec<f32> = out.trace.rows.iter().map(|r| r.eta).collect();
    assert!(eta.iter().all(|e| e.is_finite()));
    assert!(eta.windows(2).all(|w| w[1] < w[0]), "{eta:?}");
    assert!(eta[eta.len() - 1] < 0.7 * eta[0], "{eta:?}");
}
