//! Subcommand drivers. Each returns the tables it wrote and summary lines for stdout.

use std::fmt;
use std::path::PathBuf;

use parabolic_uzawa::linalg::EigenOptions;
use parabolic_uzawa::precond::{check_spectral_inequality, kappa_study, BlockDiagPrecond};
use parabolic_uzawa::quality::{
    convergence_study, efficiency_reliability, enrich_until_pjotr, fitted_rate, infsup_report, initial_defect, lambda_gap, FineReference,
};
use parabolic_uzawa::riesz::{estimate_c_j, RieszContext};
use parabolic_uzawa::rng::SeededRng;
use parabolic_uzawa::spaces::{BasisSpec, Mesh1D, TensorSpacePair};
use parabolic_uzawa::system::{assemble_rhs, ReferenceOptions, SaddleState, SaddleSystem};
use parabolic_uzawa::uzawa::{perturbation_band, plan_inner_count, run_inexact_uzawa_with, UzawaConfig, UzawaOutcome};
use parabolic_uzawa::{DenseMatrix64, Error};

use crate::config::{ConfigError, ExperimentConfig, OuterRiesz};
use crate::output::{format_float, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    Convergence,
    UzawaTrace,
    Infsup,
    Pjotr,
    Precond,
    Constants,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Convergence => "convergence",
            Subcommand::UzawaTrace => "uzawa-trace",
            Subcommand::Infsup => "infsup",
            Subcommand::Pjotr => "pjotr",
            Subcommand::Precond => "precond",
            Subcommand::Constants => "constants",
        }
    }
}

/// Failure of a run, mapped to the process exit code.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// Iteration budget exhausted; the report holds whatever was written.
    NotConverged { message: String, report: Option<Report> },
    Numeric(String),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::NotConverged { .. } => 3,
            RunError::Numeric(_) | RunError::Io(_) => 4,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::NotConverged { message, .. } => write!(f, "not converged: {message}"),
            RunError::Numeric(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged { .. } | Error::EigenNotConverged { .. } => RunError::NotConverged {
                message: e.to_string(),
                report: None,
            },
            Error::InvalidParameter(_) | Error::UnsupportedBasis(_) | Error::InvalidMesh(_) => RunError::Config(ConfigError {
                messages: vec![e.to_string()],
            }),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Files written and `key = value` summary lines.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    report: Report,
}

impl Ctx<'_> {
    fn write(&mut self, table: &Table) -> Result<(), RunError> {
        let path = table.write(&self.cfg.output.dir, self.cfg.output.precision)?;
        self.report.files.push(path);
        Ok(())
    }

    fn note(&mut self, key: &str, value: impl Into<Cell>) {
        let v = value.into().render(self.cfg.output.precision);
        self.report.summary.push((key.to_string(), v));
    }
}

/// Trial/test pair of the configured discretization at `level` uniform refinements.
pub fn build_pair(cfg: &ExperimentConfig, level: usize) -> Result<TensorSpacePair<f64>, Error> {
    let d = &cfg.discretization;
    let tm = Mesh1D::uniform(0.0, cfg.problem.t_final, d.nt << level)?;
    let xm = Mesh1D::uniform(0.0, 1.0, d.nx << level)?;
    TensorSpacePair::new(
        (tm.clone(), BasisSpec::CG1),
        (tm.refined(d.test_refine_t), d.time_test_basis),
        (xm.clone(), BasisSpec::CG1_DIRICHLET),
        (xm.refined(d.test_refine_x), BasisSpec::CG1_DIRICHLET),
    )
}

fn uzawa_config(cfg: &ExperimentConfig) -> Result<UzawaConfig<f64>, Error> {
    let s = &cfg.solver;
    let c = UzawaConfig::theoretical(&cfg.bundle(), s.sigma_hat_s, s.tol, s.max_outer)?;
    Ok(match s.inner_steps {
        Some(l) => c.with_inner_steps(l),
        None => c,
    })
}

fn run_uzawa(
    cfg: &ExperimentConfig,
    sys: &SaddleSystem<f64>,
    ctx: &RieszContext<f64>,
    rhs: &parabolic_uzawa::system::Rhs<f64>,
    ucfg: &UzawaConfig<f64>,
    reference: Option<&SaddleState<f64>>,
) -> Result<UzawaOutcome<f64>, Error> {
    let start = SaddleState::zeros(&sys.pair);
    match cfg.solver.outer_riesz {
        OuterRiesz::Exact => run_inexact_uzawa_with(sys, rhs, ctx, ucfg, &start, reference, None),
        OuterRiesz::Preconditioned => {
            let p = BlockDiagPrecond::for_pair(&sys.pair)?;
            let outer = |r: &[f64]| p.apply(r);
            run_inexact_uzawa_with(sys, rhs, ctx, ucfg, &start, reference, Some(&outer))
        }
    }
}

fn not_converged(c: Ctx<'_>, message: String) -> RunError {
    RunError::NotConverged {
        message,
        report: Some(c.report),
    }
}

fn constants(c: &mut Ctx<'_>) -> Result<(), RunError> {
    let b = c.cfg.bundle();
    let ucfg = uzawa_config(c.cfg)?;
    let plan = plan_inner_count(&b, ucfg.sigma_hat_s)?;
    let a = b.a_constants();
    let s = b.s_constants();
    let mut t = Table::new("constants", &["name", "value"]);
    let rows: Vec<(&str, Cell)> = vec![
        ("L_A", b.l_a.into()),
        ("m_A", b.m_a.into()),
        ("L_N", b.l_n.into()),
        ("L_S", b.l_s.into()),
        ("m_S", b.m_s.into()),
        ("L_Ninv", b.l_ninv.into()),
        ("L_Beinv", b.l_beinv.into()),
        ("C_1", b.c_1.into()),
        ("C_PF", b.c_pf.into()),
        ("sigma_A", a.sigma.into()),
        ("sigma_S", s.sigma.into()),
        ("theta_A", a.theta_star.into()),
        ("theta_S", s.theta_star.into()),
        ("sigma_hat_S", ucfg.sigma_hat_s.into()),
        ("C_3", plan.c_3.into()),
        ("L", plan.inner_steps.into()),
        ("L_used", ucfg.inner_steps.into()),
        ("galerkin_bound_gamma1", b.galerkin_bound(1.0).into()),
        ("lambda_gap_factor", b.lambda_gap_bound().into()),
        ("efficiency_lower", b.efficiency_lower().into()),
        ("reliability_upper", b.reliability_upper(c.cfg.quality.rho).into()),
    ];
    for (k, v) in rows {
        c.note(k, v.clone());
        t.push(vec![k.into(), v]);
    }
    c.write(&t)
}

fn solve(mut c: Ctx<'_>) -> Result<Report, RunError> {
    let cfg = c.cfg;
    let pair = build_pair(cfg, 0)?;
    let mu = cfg.problem.mu.build();
    let data = cfg.problem.build_data();
    let sys = SaddleSystem::new(&pair, &mu)?;
    let ctx = RieszContext::new(&pair)?;
    let rhs = assemble_rhs(&data, &pair)?;
    let ucfg = uzawa_config(cfg)?;
    let out = run_uzawa(cfg, &sys, &ctx, &rhs, &ucfg, None)?;

    let mut sol = Table::new("solution", &["t", "x", "u"]);
    for &t in pair.x_t.mesh().points() {
        for &x in pair.x_x.mesh().points() {
            sol.push(vec![t.into(), x.into(), pair.eval_x(&out.state.u, t, x).into()]);
        }
    }
    c.write(&sol)?;
    let last = out.trace.rows.last().expect("at least one row");
    let gap = if pair.x_in_y { Some(lambda_gap(&pair, &out.state)?) } else { None };
    let defect = initial_defect(&pair, &data, &out.state.u)?;
    let mut summary = Table::new(
        "solve_summary",
        &["iterations", "converged", "eta", "res_Y", "res_X", "inner_steps", "sigma_hat_S", "C_3", "lambda_gap", "initial_defect"],
    );
    summary.push(vec![
        last.k.into(),
        out.converged.into(),
        last.eta.into(),
        last.res_y.into(),
        last.res_x.into(),
        ucfg.inner_steps.into(),
        ucfg.sigma_hat_s.into(),
        ucfg.c_3.into(),
        gap.into(),
        defect.into(),
    ]);
    c.write(&summary)?;
    c.note("iterations", last.k);
    c.note("eta", last.eta);
    c.note("converged", out.converged);
    if !out.converged {
        return Err(not_converged(c, format!("eta = {} after {} outer steps", format_float(last.eta, 6), last.k)));
    }
    Ok(c.report)
}

fn uzawa_trace(mut c: Ctx<'_>) -> Result<Report, RunError> {
    let cfg = c.cfg;
    let pair = build_pair(cfg, 0)?;
    let mu = cfg.problem.mu.build();
    let data = cfg.problem.build_data();
    let sys = SaddleSystem::new(&pair, &mu)?;
    let ctx = RieszContext::new(&pair)?;
    let rhs = assemble_rhs(&data, &pair)?;
    let reference = sys.solve_reference(
        &rhs,
        &ctx,
        &ReferenceOptions {
            tol: cfg.solver.reference_tol,
            ..ReferenceOptions::default()
        },
    )?;
    let ucfg = uzawa_config(cfg)?;
    let out = run_uzawa(cfg, &sys, &ctx, &rhs, &ucfg, Some(&reference))?;

    let mut trace = Table::new("uzawa_trace", &["k", "eta", "res_Y", "res_X", "err_u", "err_lambda", "inner_count"]);
    for r in &out.trace.rows {
        trace.push(vec![r.k.into(), r.eta.into(), r.res_y.into(), r.res_x.into(), r.err_u.into(), r.err_lambda.into(), r.inner_count.into()]);
    }
    c.write(&trace)?;

    let b = cfg.bundle();
    let mut rng = SeededRng::new(cfg.seed);
    let mut band = Table::new("aposteriori_band", &["sample", "error", "eta", "ratio", "lower", "upper"]);
    let (lo, hi) = (1.0 / b.l_n, b.l_ninv);
    let mut inside = 0;
    let samples = perturbation_band(&sys, &rhs, &ctx, &reference, cfg.quality.perturbations, &mut rng);
    for (i, s) in samples.iter().enumerate() {
        if s.ratio >= lo - 1e-9 && s.ratio <= hi + 1e-9 {
            inside += 1;
        }
        band.push(vec![i.into(), s.error.into(), s.eta.into(), s.ratio.into(), lo.into(), hi.into()]);
    }
    c.write(&band)?;

    let last = out.trace.rows.last().expect("at least one row");
    c.note("iterations", last.k);
    c.note("eta", last.eta);
    c.note("converged", out.converged);
    if let Some((vu, vl)) = out.trace.envelope_violation(ucfg.sigma_hat_s, ucfg.c_3) {
        c.note("envelope_violation_u", vu);
        c.note("envelope_violation_lambda", vl);
    }
    c.note("band_inside", inside);
    c.note("band_samples", samples.len());
    if !out.converged {
        return Err(not_converged(c, format!("eta = {} after {} outer steps", format_float(last.eta, 6), last.k)));
    }
    Ok(c.report)
}

fn convergence(mut c: Ctx<'_>) -> Result<Report, RunError> {
    let cfg = c.cfg;
    let d = &cfg.discretization;
    let rows = convergence_study(
        &cfg.problem.build_data(),
        &cfg.problem.mu.build(),
        cfg.problem.t_final,
        &d.sizes,
        d.reference_refinements,
        cfg.solver.reference_tol,
    )?;
    let mut t = Table::new(
        "convergence",
        &[
            "n",
            "dim_x",
            "err_X",
            "rate",
            "lambda_gap",
            "quasi_opt_ratio",
            "quasi_opt_bound",
            "error_lhs",
            "error_bound",
            "gap_lhs",
            "gap_bound",
        ],
    );
    for r in &rows {
        t.push(vec![
            r.n.into(),
            r.dim_x.into(),
            r.err_x.into(),
            r.rate.into(),
            r.lambda_gap.into(),
            r.quasi_opt.ratio.into(),
            r.quasi_opt.bound.into(),
            r.apriori.error_lhs.into(),
            r.apriori.error_bound.into(),
            r.apriori.gap_lhs.into(),
            r.apriori.gap_bound.into(),
        ]);
    }
    c.write(&t)?;
    if rows.len() >= 2 {
        let errs: Vec<f64> = rows.iter().map(|r| r.err_x).collect();
        c.note("fitted_rate", fitted_rate(&d.sizes, &errs));
    }
    Ok(c.report)
}

fn infsup(mut c: Ctx<'_>) -> Result<Report, RunError> {
    let cfg = c.cfg;
    let d = &cfg.discretization;
    let mut t = Table::new("infsup", &["level", "nt", "nx", "gamma_t", "gamma_x", "gamma_lower", "gamma_direct", "c_j"]);
    for level in 0..d.infsup_levels {
        let pair = build_pair(cfg, level)?;
        let with_direct = pair.dim_x() <= cfg.quality.direct_max_dim;
        let r = infsup_report(&pair, d.reference_refinements, with_direct)?;
        let c_j = if pair.has_equal_spatial_factors() { Some(estimate_c_j(&pair)?) } else { None };
        t.push(vec![
            level.into(),
            (d.nt << level).into(),
            (d.nx << level).into(),
            r.gamma_t.into(),
            r.gamma_x.into(),
            r.gamma_lower.into(),
            r.gamma_direct.into(),
            c_j.into(),
        ]);
    }
    c.write(&t)?;
    Ok(c.report)
}

fn pjotr(mut c: Ctx<'_>) -> Result<Report, RunError> {
    let cfg = c.cfg;
    let q = &cfg.quality;
    let base = build_pair(cfg, 0)?;
    let mu = cfg.problem.mu.build();
    let data = cfg.problem.build_data();
    let search = enrich_until_pjotr(&base, &data, &mu, q.rho, q.max_levels, q.lookahead)?;
    let mut t = Table::new("pjotr", &["level", "lhs", "rhs", "satisfied", "degenerate"]);
    for (level, r) in search.history.iter().enumerate() {
        t.push(vec![level.into(), r.lhs.into(), r.rhs.into(), r.satisfied.into(), r.degenerate.into()]);
    }
    c.write(&t)?;
    c.note("level", search.level);
    c.note("satisfied", search.report.satisfied);
    if !search.report.satisfied {
        return Err(not_converged(c, format!("quasi-optimality test unsatisfied after {} levels", q.max_levels)));
    }
    let reference = FineReference::new(&search.pair, &data, &mu, cfg.discretization.reference_refinements, cfg.solver.reference_tol)?;
    let mut e = Table::new("efficiency", &["level", "ratio", "lower", "upper"]);
    match efficiency_reliability(&reference, &search.pair, &search.state, &data, &cfg.bundle(), q.rho) {
        Ok(r) => {
            e.push(vec![search.level.into(), r.ratio.into(), r.lower.into(), r.upper.into()]);
            c.note("efficiency_ratio", r.ratio);
        }
        Err(Error::Undefined(_)) => e.push(vec![search.level.into(), Cell::Missing, Cell::Missing, Cell::Missing]),
        Err(other) => return Err(other.into()),
    }
    c.write(&e)?;
    Ok(c.report)
}

fn precond(mut c: Ctx<'_>) -> Result<Report, RunError> {
    let cfg = c.cfg;
    let p = &cfg.precond;
    let opts = EigenOptions {
        tol: 1e-8,
        max_iter: 2000,
        seed: cfg.seed,
    };
    let rows = kappa_study(p.levels, cfg.problem.t_final, p.spatial, p.wavelet, &opts)?;
    let mut t = Table::new("kappa", &["level", "dim", "kappa"]);
    for r in &rows {
        t.push(vec![r.level.into(), r.dim.into(), r.kappa.into()]);
    }
    c.write(&t)?;
    let max = rows.iter().map(|r| r.kappa).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.kappa).fold(f64::INFINITY, f64::min);
    c.note("kappa_max_over_min", max / min);

    let mut rng = SeededRng::new(cfg.seed);
    let mut m = Table::new("spectral_margins", &["sample", "alpha", "lower", "lower_tight", "upper_literal", "upper_corrected"]);
    for i in 0..cfg.quality.perturbations {
        let n = 2 + (rng.next_u64() % 5) as usize;
        let (a, mm) = (random_spd(&mut rng, n), random_spd(&mut rng, n));
        let alpha = 10f64.powf(rng.uniform_in(-2.0, 2.0));
        let s = check_spectral_inequality(&a, &mm, alpha)?;
        m.push(vec![i.into(), alpha.into(), s.lower.into(), s.lower_tight.into(), s.upper_literal.into(), s.upper_corrected.into()]);
    }
    c.write(&m)?;
    Ok(c.report)
}

/// `GᵀG + I/10` for a Gaussian `G`.
pub fn random_spd(rng: &mut SeededRng, n: usize) -> DenseMatrix64 {
    let vals: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
    let g = DenseMatrix64::from_fn(n, n, |i, j| vals[i * n + j]);
    let mut s = g.transpose().matmul(&g).add(&DenseMatrix64::identity(n).scaled(0.1));
    s.symmetrize();
    s
}

/// Runs `cmd` and writes its CSV files into the configured output directory.
pub fn run_subcommand(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let mut c = Ctx { cfg, report: Report::default() };
    match cmd {
        Subcommand::Constants => {
            constants(&mut c)?;
            Ok(c.report)
        }
        Subcommand::Solve => solve(c),
        Subcommand::UzawaTrace => uzawa_trace(c),
        Subcommand::Convergence => convergence(c),
        Subcommand::Infsup => infsup(c),
        Subcommand::Pjotr => pjotr(c),
        Subcommand::Precond => precond(c),
    }
}
