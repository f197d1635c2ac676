//! Experiment configuration: a TOML file whose keys are read as dotted
//! paths (`solver.tol = 1e-8` and a `[solver]` table with `tol = 1e-8` are
//! equivalent). Every violation is collected before reporting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use parabolic_uzawa::monotone::MuCoefficient;
use parabolic_uzawa::precond::{SpatialRefinement, WaveletKind};
use parabolic_uzawa::spaces::BasisSpec;
use parabolic_uzawa::system::{ConstantsBundle, ProblemData};
use parabolic_uzawa::uzawa::plan_inner_count;

/// All violations found in one configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub messages: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for m in &self.messages {
            writeln!(f, "  {m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn single(msg: impl Into<String>) -> Self {
        Self { messages: vec![msg.into()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataKind {
    /// `u = sin(πx) e^{−π²t}`, zero source.
    Heat,
    /// Forcing manufactured from `u = sin(πx) e^{−t}` and the chosen `μ`.
    Decay,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSpec {
    Constant(f64),
    OnePlusInv,
    BoundedRamp { a: f64, b: f64 },
}

impl MuSpec {
    pub fn build(&self) -> MuCoefficient<f64> {
        match *self {
            MuSpec::Constant(c) => MuCoefficient::constant(c).expect("validated"),
            MuSpec::OnePlusInv => MuCoefficient::one_plus_inv(),
            MuSpec::BoundedRamp { a, b } => MuCoefficient::bounded_ramp(a, b).expect("validated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub data: DataKind,
    pub mu: MuSpec,
    pub t_final: f64,
}

impl ProblemConfig {
    pub fn build_data(&self) -> ProblemData<f64> {
        match self.data {
            DataKind::Heat => ProblemData::heat(),
            DataKind::Decay => ProblemData::decay(self.mu.build()),
            DataKind::Zero => ProblemData::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationConfig {
    pub nt: usize,
    pub nx: usize,
    /// Extra uniform refinements of the temporal and spatial test meshes.
    pub test_refine_t: usize,
    pub test_refine_x: usize,
    pub time_test_basis: BasisSpec,
    /// Elements per direction of each convergence level.
    pub sizes: Vec<usize>,
    pub reference_refinements: usize,
    pub infsup_levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterRiesz {
    Exact,
    Preconditioned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub sigma_hat_s: Option<f64>,
    pub tol: f64,
    pub max_outer: usize,
    /// Practical override of the planned inner step count.
    pub inner_steps: Option<usize>,
    pub outer_riesz: OuterRiesz,
    pub reference_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityConfig {
    pub rho: f64,
    pub max_levels: usize,
    pub lookahead: usize,
    pub perturbations: usize,
    /// Largest trial dimension for the dense direct inf-sup computation.
    pub direct_max_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecondConfig {
    pub levels: usize,
    pub spatial: SpatialRefinement,
    pub wavelet: WaveletKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Significant digits of floating-point CSV fields.
    pub precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub discretization: DiscretizationConfig,
    pub solver: SolverConfig,
    pub quality: QualityConfig,
    pub precond: PrecondConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn bundle(&self) -> ConstantsBundle<f64> {
        ConstantsBundle::from_mu(&self.problem.mu.build())
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

struct Reader {
    map: BTreeMap<String, toml::Value>,
    used: BTreeSet<String>,
    errors: Vec<String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<toml::Value> {
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn opt_f64(&mut self, key: &str) -> Option<f64> {
        match self.take(key)? {
            toml::Value::Float(x) => Some(x),
            toml::Value::Integer(i) => Some(i as f64),
            other => {
                self.errors.push(format!("{key}: expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn opt_usize(&mut self, key: &str) -> Option<usize> {
        match self.take(key)? {
            toml::Value::Integer(i) if i >= 0 => Some(i as usize),
            toml::Value::Integer(i) => {
                self.errors.push(format!("{key}: expected a nonnegative integer, found {i}"));
                None
            }
            other => {
                self.errors.push(format!("{key}: expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.opt_usize(key).unwrap_or(default)
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        match self.take(key) {
            None => default.to_string(),
            Some(toml::Value::String(s)) => s,
            Some(other) => {
                self.errors.push(format!("{key}: expected a string, found {}", other.type_str()));
                default.to_string()
            }
        }
    }

    fn usize_list(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.take(key) {
            None => default.to_vec(),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::Integer(i) if i >= 1 => out.push(i as usize),
                        other => self.errors.push(format!("{key}: entries must be integers >= 1, found {other}")),
                    }
                }
                out
            }
            Some(other) => {
                self.errors.push(format!("{key}: expected an array of integers, found {}", other.type_str()));
                default.to_vec()
            }
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::single(format!("syntax: {}", e.message())))?;
    let mut map = BTreeMap::new();
    flatten("", &table, &mut map);
    let mut r = Reader {
        map,
        used: BTreeSet::new(),
        errors: Vec::new(),
    };

    let seed = r.usize("seed", 0) as u64;

    let data = match r.string("problem.data", "heat").as_str() {
        "heat" => DataKind::Heat,
        "decay" => DataKind::Decay,
        "zero" => DataKind::Zero,
        other => {
            r.errors.push(format!("problem.data: unknown name {other:?} (expected heat, decay or zero)"));
            DataKind::Heat
        }
    };
    let mu_name = r.string("problem.mu", "constant");
    let mu_value = r.f64("problem.mu_value", 1.0);
    let ramp_a = r.f64("problem.ramp_a", 1.0);
    let ramp_b = r.f64("problem.ramp_b", 1.0);
    let mu = match mu_name.as_str() {
        "constant" => {
            r.check(mu_value > 0.0, || format!("problem.mu_value: must be positive, got {mu_value}"));
            MuSpec::Constant(if mu_value > 0.0 { mu_value } else { 1.0 })
        }
        "one_plus_inv" => MuSpec::OnePlusInv,
        "bounded_ramp" => {
            let ok = ramp_a > 0.0 && ramp_b >= 0.0;
            r.check(ok, || format!("problem.ramp_a/ramp_b: need a > 0 and b >= 0, got {ramp_a}, {ramp_b}"));
            if ok {
                MuSpec::BoundedRamp { a: ramp_a, b: ramp_b }
            } else {
                MuSpec::Constant(1.0)
            }
        }
        other => {
            r.errors.push(format!("problem.mu: unknown name {other:?} (expected constant, one_plus_inv or bounded_ramp)"));
            MuSpec::Constant(1.0)
        }
    };
    let t_final = r.f64("problem.t_final", 1.0);
    r.check(t_final > 0.0 && t_final.is_finite(), || format!("problem.t_final: must be positive, got {t_final}"));

    let nt = r.usize("discretization.nt", 8);
    let nx = r.usize("discretization.nx", 8);
    r.check(nt >= 1, || "discretization.nt: must be >= 1".into());
    r.check(nx >= 1, || "discretization.nx: must be >= 1".into());
    let test_refine_t = r.usize("discretization.test_refine_t", 0);
    let test_refine_x = r.usize("discretization.test_refine_x", 0);
    let time_test_basis = match r.string("discretization.time_test_basis", "dg1").as_str() {
        "dg1" => BasisSpec::DG1,
        "dg0" => BasisSpec::DG0,
        "cg1" => BasisSpec::CG1,
        other => {
            r.errors.push(format!("discretization.time_test_basis: unknown name {other:?} (expected dg1, dg0 or cg1)"));
            BasisSpec::DG1
        }
    };
    let sizes = r.usize_list("discretization.sizes", &[4, 8, 16, 32]);
    r.check(!sizes.is_empty(), || "discretization.sizes: must not be empty".into());
    let reference_refinements = r.usize("discretization.reference_refinements", 2);
    r.check(reference_refinements >= 1, || "discretization.reference_refinements: must be >= 1".into());
    let infsup_levels = r.usize("discretization.infsup_levels", 5);
    r.check(infsup_levels >= 1, || "discretization.infsup_levels: must be >= 1".into());

    let sigma_hat_s = r.opt_f64("solver.sigma_hat_s");
    let tol = r.f64("solver.tol", 1e-8);
    r.check(tol > 0.0 && tol.is_finite(), || format!("solver.tol: must be positive, got {tol}"));
    let max_outer = r.usize("solver.max_outer", 2000);
    let inner_steps = r.opt_usize("solver.inner_steps");
    r.check(inner_steps != Some(0), || "solver.inner_steps: must be >= 1".into());
    let outer_riesz = match r.string("solver.outer_riesz", "exact").as_str() {
        "exact" => OuterRiesz::Exact,
        "preconditioned" => OuterRiesz::Preconditioned,
        other => {
            r.errors.push(format!("solver.outer_riesz: unknown name {other:?} (expected exact or preconditioned)"));
            OuterRiesz::Exact
        }
    };
    r.check(outer_riesz == OuterRiesz::Exact || nt.is_power_of_two(), || {
        format!("solver.outer_riesz: preconditioned needs a power-of-two discretization.nt, got {nt}")
    });
    let reference_tol = r.f64("solver.reference_tol", 1e-12);
    r.check(reference_tol >= 1e-12 && reference_tol.is_finite(), || {
        format!("solver.reference_tol: must be at least 1e-12, got {reference_tol}")
    });

    let rho = r.f64("quality.rho", 1.0);
    r.check(rho > 0.0 && rho.is_finite(), || format!("quality.rho: must be positive, got {rho}"));
    let max_levels = r.usize("quality.max_levels", 4);
    let lookahead = r.usize("quality.lookahead", 2);
    r.check(lookahead >= 1, || "quality.lookahead: must be >= 1".into());
    let perturbations = r.usize("quality.perturbations", 50);
    let direct_max_dim = r.usize("quality.direct_max_dim", 600);

    let levels = r.usize("precond.levels", 5);
    r.check(levels >= 1, || "precond.levels: must be >= 1".into());
    let spatial = match r.take("precond.spatial") {
        None => SpatialRefinement::default(),
        Some(toml::Value::Integer(n)) if n >= 1 => SpatialRefinement::Fixed(n as usize),
        Some(toml::Value::String(s)) if s == "matched" => SpatialRefinement::Matched,
        Some(other) => {
            r.errors.push(format!("precond.spatial: expected an element count >= 1 or \"matched\", found {other}"));
            SpatialRefinement::default()
        }
    };
    let wavelet = match r.string("precond.wavelet", "lifted").as_str() {
        "lifted" => WaveletKind::Lifted,
        "prewavelet" => WaveletKind::Prewavelet,
        other => {
            r.errors.push(format!("precond.wavelet: unknown name {other:?} (expected lifted or prewavelet)"));
            WaveletKind::Lifted
        }
    };

    let dir = PathBuf::from(r.string("output.dir", "out"));
    let precision = r.usize("output.precision", 17);
    r.check((1..=17).contains(&precision), || format!("output.precision: must lie in 1..=17, got {precision}"));

    let unknown: Vec<String> = r.map.keys().filter(|k| !r.used.contains(*k)).cloned().collect();
    for k in unknown {
        r.errors.push(format!("{k}: unknown key"));
    }

    let cfg = ExperimentConfig {
        seed,
        problem: ProblemConfig { data, mu, t_final },
        discretization: DiscretizationConfig {
            nt,
            nx,
            test_refine_t,
            test_refine_x,
            time_test_basis,
            sizes,
            reference_refinements,
            infsup_levels,
        },
        solver: SolverConfig {
            sigma_hat_s,
            tol,
            max_outer,
            inner_steps,
            outer_riesz,
            reference_tol,
        },
        quality: QualityConfig {
            rho,
            max_levels,
            lookahead,
            perturbations,
            direct_max_dim,
        },
        precond: PrecondConfig { levels, spatial, wavelet },
        output: OutputConfig { dir, precision },
    };
    if let Some(s) = sigma_hat_s {
        if let Err(e) = plan_inner_count(&cfg.bundle(), s) {
            r.errors.push(format!("solver.sigma_hat_s: {e}"));
        }
    }
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { messages: r.errors })
    }
}

/// Reads and validates the file at `path`.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::single(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
