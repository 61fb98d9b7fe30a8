//! `mixmkl` command line. Every subcommand writes one JSON report holding the
//! tool version, the resolved configuration and the result.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use mixmkl::bounds::{self, BoundInputs, BoundKind, RademacherKind, SweepParam};
use mixmkl::chain::{self, Chain, ChainSpec, Tolerances};
use mixmkl::data::{self, AssignmentMode, MixedDataset};
use mixmkl::kernel::KernelFamily;
use mixmkl::learner::{self, TrainOptions};
use mixmkl::par::Execution;
use mixmkl::pool::{self, ChainPool, PoolOptions, PoolSpec};
use mixmkl::verify::{self, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

pub const THREADS_ENV: &str = "MIXMKL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "mixmkl", version, about = "Mixing-time analysis, mixed-chain data and MKL generalization bounds")]
struct Cli {
    /// Run the data-parallel loops sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary law, spectral gaps, mixing profile and τ_min of one chain.
    Chain(ChainArgs),
    /// Per-chain summaries and pool aggregates.
    Pool(PoolArgs),
    /// Sample a mixed dataset to CSV.
    Generate(GenerateArgs),
    /// Train an MKL model on a CSV dataset.
    Train(TrainArgs),
    /// Evaluate a complexity or generalization bound.
    Bound(BoundArgs),
    /// Run a verification suite; exits 2 when an inequality fails.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
}

#[derive(Args, Debug, Serialize)]
struct Output {
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ChainArgs {
    /// Chain JSON: {"states", "rows", ...}.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = chain::DEFAULT_K_MAX)]
    k_max: usize,
    /// Extend the TV profile until d(t) reaches this level.
    #[arg(long, default_value_t = 0.05)]
    min_epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    max_horizon: usize,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct PoolArgs {
    /// Pool JSON: {"chains": [...], "initial": [...]}.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = chain::DEFAULT_K_MAX)]
    k_max: usize,
    /// ε grid for t_amix, comma separated.
    #[arg(long, value_delimiter = ',')]
    epsilon_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    max_horizon: usize,
    /// Sample size for A_n/B_n (omitted: not reported).
    #[arg(long)]
    n: Option<usize>,
    /// Sup-norm M for A_n.
    #[arg(long, default_value_t = 1.0)]
    sup_norm: f64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Probabilistic,
    Proportional,
}

impl From<Mode> for AssignmentMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Probabilistic => AssignmentMode::Probabilistic,
            Mode::Proportional => AssignmentMode::Proportional,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Probabilistic)]
    mode: Mode,
    /// Skip label emission.
    #[arg(long)]
    no_labels: bool,
    /// Dataset CSV path.
    #[arg(long)]
    csv: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct FamilyArgs {
    /// Kernel family JSON (overrides --sigmas).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Gaussian widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    #[serde(rename = "B")]
    b: f64,
}

impl FamilyArgs {
    fn resolve(&self) -> Result<Option<KernelFamily>, CliError> {
        if let Some(path) = &self.family {
            let fam: KernelFamily = read_json(path)?;
            fam.validate()?;
            return Ok(Some(fam));
        }
        match &self.sigmas {
            Some(s) => Ok(Some(KernelFamily::gaussian(s, self.q, self.b)?)),
            None => Ok(None),
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    /// Pool JSON; enables the exact true error.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Dataset CSV written by `generate`.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    eta_step: f64,
    /// Model JSON path.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BoundName {
    Thm1,
    Thm2,
    Thm3,
    Corollary,
    Master,
    Lemma5,
    CortesQ,
    CortesL1,
    Pseudodim,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Sweep {
    N,
    M,
}

#[derive(Args, Debug, Serialize)]
struct BoundArgs {
    #[arg(value_enum)]
    kind: BoundName,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long = "B", default_value_t = 1.0)]
    #[serde(rename = "B")]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    tau_min: Option<f64>,
    #[arg(long)]
    b_n: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    d_k: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    c_chaos: f64,
    /// Measured Rademacher value (required by `master`).
    #[arg(long)]
    rademacher: Option<f64>,
    /// Sweep n or m over --values instead of a single evaluation.
    #[arg(long, value_enum, requires = "values")]
    sweep: Option<Sweep>,
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    /// CSV path for sweep rows.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    Mcdiarmid(ExperimentArgs),
    Bernstein(ExperimentArgs),
    Symmetrization(ExperimentArgs),
    Generalization(ExperimentArgs),
    Spectral(PoolArgs),
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    /// Full experiment JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pool JSON (required without --config).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// t or u grid, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Per-state table g, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    g: Option<Vec<f64>>,
    /// JSON file with the function class (array of per-state tables).
    #[arg(long)]
    functions: Option<PathBuf>,
    /// Use this many seeded random ±1 tables as the function class.
    #[arg(long)]
    random_signs: Option<usize>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    pilot_factor: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    m_sweep: Option<Vec<usize>>,
    #[arg(long)]
    rademacher_trials: Option<usize>,
    /// CSV path for the tail grid.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Core(mixmkl::Error),
    Io(PathBuf, io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<mixmkl::Error> for CliError {
    fn from(e: mixmkl::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: C,
    result: R,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    exit_code(dispatch(cli.command, exec))
}

fn exit_code(outcome: Result<bool, CliError>) -> i32 {
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let k: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|k| *k > 0)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = k;
    Ok(())
}

fn dispatch(cmd: Command, exec: Execution) -> Result<bool, CliError> {
    match cmd {
        Command::Chain(a) => cmd_chain(&a),
        Command::Pool(a) => cmd_pool(&a, exec),
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a, exec),
        Command::Bound(a) => cmd_bound(&a),
        Command::Verify { check } => cmd_verify(check, exec),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| CliError::Io(path.into(), e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(path.into(), e))
}

fn emit<C: Serialize, R: Serialize>(out: &Output, command: &str, config: C, result: R) -> Result<(), CliError> {
    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &out.out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes()).map_err(|e| CliError::Io(p.clone(), e))?;
            w.flush().map_err(|e| CliError::Io(p.clone(), e))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io("<stdout>".into(), e)),
    }
}

fn with_inputs<A: Serialize>(args: &A, inputs: Value) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(args)?;
    if let Value::Object(m) = &mut v {
        m.insert("inputs".into(), inputs);
    }
    Ok(v)
}

fn cmd_chain(a: &ChainArgs) -> Result<bool, CliError> {
    let spec: ChainSpec = read_json(&a.spec)?;
    let c = Chain::from_spec(&spec)?;
    let analysis = chain::analyze(&c.transition, a.k_max, a.min_epsilon, a.max_horizon, &Tolerances::default())?;
    let config = with_inputs(a, serde_json::to_value(&spec)?)?;
    emit(&a.output, "chain", config, analysis)?;
    Ok(true)
}

fn pool_options(a: &PoolArgs, exec: Execution) -> PoolOptions {
    let mut o = PoolOptions {
        k_max: a.k_max,
        max_horizon: a.max_horizon,
        execution: exec,
        ..PoolOptions::default()
    };
    if let Some(g) = &a.epsilon_grid {
        o.epsilon_grid = g.clone();
    }
    o
}

fn load_pool(path: &Path) -> Result<(PoolSpec, ChainPool), CliError> {
    let spec: PoolSpec = read_json(path)?;
    let pool = ChainPool::from_spec(&spec)?;
    Ok((spec, pool))
}

fn cmd_pool(a: &PoolArgs, exec: Execution) -> Result<bool, CliError> {
    let (spec, pool) = load_pool(&a.spec)?;
    let summary = pool::pool_summary(&pool, &pool_options(a, exec))?;
    let offset = a
        .n
        .map(|n| pool::symmetrization_offset_from_summary(&summary, n, a.sup_norm))
        .transpose()?;
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        summary: pool::PoolSummary,
        #[serde(skip_serializing_if = "Option::is_none")]
        offset: Option<pool::SymmetrizationOffset>,
    }
    let config = with_inputs(a, serde_json::to_value(&spec)?)?;
    emit(&a.output, "pool", config, Out { summary, offset })?;
    Ok(true)
}

fn cmd_generate(a: &GenerateArgs) -> Result<bool, CliError> {
    let (spec, pool) = load_pool(&a.spec)?;
    let mode = a.mode.into();
    let ds = if a.no_labels {
        data::generate_features(&pool, a.n, a.seed, mode)?
    } else {
        data::generate(&pool, a.n, a.seed, mode)?
    };
    let mut w = create(&a.csv)?;
    ds.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::Io(a.csv.clone(), e))?;
    #[derive(Serialize)]
    struct Out {
        samples: usize,
        per_chain: Vec<usize>,
        feature_dim: usize,
    }
    let out = Out {
        samples: ds.len(),
        per_chain: ds.partitions.iter().map(|t| t.len()).collect(),
        feature_dim: ds.feature_dim(),
    };
    let config = with_inputs(a, serde_json::to_value(&spec)?)?;
    emit(&a.output, "generate", config, out)?;
    Ok(true)
}

fn cmd_train(a: &TrainArgs, exec: Execution) -> Result<bool, CliError> {
    let fam = a
        .family
        .resolve()?
        .ok_or_else(|| CliError::Invalid("train needs --family or --sigmas".into()))?;
    let pool = a.spec.as_deref().map(load_pool).transpose()?;
    let f = File::open(&a.data).map_err(|e| CliError::Io(a.data.clone(), e))?;
    let ds = MixedDataset::read_csv(BufReader::new(f), pool.as_ref().map(|p| p.1.len()))?;
    let opts = TrainOptions {
        iterations: a.iterations,
        eta_step: a.eta_step,
        execution: exec,
    };
    let model = learner::train(&ds, &fam, a.delta, &opts)?;
    if let Some(p) = &a.model {
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, &model)?;
        w.flush().map_err(|e| CliError::Io(p.clone(), e))?;
    }
    #[derive(Serialize)]
    struct Out {
        objective: f64,
        eta: Vec<f64>,
        rkhs_norm_squared: f64,
        margin_error: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        true_error: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        estimation_error: Option<f64>,
    }
    let margin_error = learner::empirical_margin_error(&model, &ds, a.delta)?;
    let true_error = pool.as_ref().map(|p| learner::true_error_exact(&model, &p.1)).transpose()?;
    let out = Out {
        objective: model.objective,
        eta: model.eta.eta.clone(),
        rkhs_norm_squared: model.rkhs_norm_squared()?,
        margin_error,
        true_error,
        estimation_error: true_error.map(|t| t - margin_error),
    };
    let config = with_inputs(
        a,
        serde_json::json!({ "family": fam, "samples": ds.len(), "pool": pool.map(|p| p.0) }),
    )?;
    emit(&a.output, "train", config, out)?;
    Ok(true)
}

fn cmd_bound(a: &BoundArgs) -> Result<bool, CliError> {
    let inp = BoundInputs {
        n: a.n,
        m: a.m,
        b: a.b,
        kappa: a.kappa,
        delta: a.delta,
        alpha: a.alpha,
        tau_min: a.tau_min,
        b_n: a.b_n,
        q: a.q,
        r: a.r,
        d_k: a.d_k,
        c_chaos: a.c_chaos,
    };
    let general = match a.kind {
        BoundName::Thm1 => Some(BoundKind::Thm1),
        BoundName::Thm2 => Some(BoundKind::Thm2),
        BoundName::Thm3 => Some(BoundKind::Thm3),
        BoundName::Corollary => Some(BoundKind::Corollary),
        BoundName::Master => Some(BoundKind::Master),
        _ => None,
    };
    if let (Some(sweep), Some(values)) = (a.sweep, &a.values) {
        let kind = general.ok_or_else(|| CliError::Invalid("sweeps need a generalization bound kind".into()))?;
        let param = match sweep {
            Sweep::N => SweepParam::N,
            Sweep::M => SweepParam::M,
        };
        let reports = bounds::sweep(kind, &inp, param, values)?;
        if let Some(p) = &a.csv {
            let mut w = create(p)?;
            bounds::write_sweep_csv(&reports, param, &mut w)?;
            w.flush().map_err(|e| CliError::Io(p.clone(), e))?;
        }
        emit(&a.output, "bound", a, reports)?;
        return Ok(true);
    }
    let report = match (general, a.kind) {
        (Some(k), _) => bounds::generalization_bound(k, &inp, a.rademacher)?,
        (None, BoundName::Lemma5) => bounds::rademacher_bound(RademacherKind::Lemma5, &inp)?,
        (None, BoundName::CortesQ) => bounds::rademacher_bound(RademacherKind::CortesQ, &inp)?,
        (None, BoundName::CortesL1) => bounds::rademacher_bound(RademacherKind::CortesL1, &inp)?,
        (None, _) => bounds::rademacher_bound(RademacherKind::Pseudodim, &inp)?,
    };
    emit(&a.output, "bound", a, report)?;
    Ok(true)
}

fn sign_tables(count: usize, states: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = mixmkl::rng::Stream::new(seed, 0);
    (0..count).map(|_| (0..states).map(|_| s.sign()).collect()).collect()
}

fn experiment(a: &ExperimentArgs, exec: Execution) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&a.config, &a.spec) {
        (Some(p), _) => read_json::<ExperimentConfig>(p)?,
        (None, Some(spec)) => {
            let (_, pool) = load_pool(spec)?;
            let n = a.n.ok_or_else(|| CliError::Invalid("--n is required without --config".into()))?;
            let trials = a
                .trials
                .ok_or_else(|| CliError::Invalid("--trials is required without --config".into()))?;
            ExperimentConfig::new(&pool, n, trials, 0)
        }
        (None, None) => return Err(CliError::Invalid("pass --config or --spec".into())),
    };
    if a.config.is_some() {
        if let Some(spec) = &a.spec {
            cfg.pool = load_pool(spec)?.0;
        }
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(g) = &a.grid {
        cfg.grid = g.clone();
    }
    if let Some(g) = &a.g {
        cfg.g = Some(g.clone());
    }
    if let Some(p) = &a.functions {
        cfg.functions = Some(read_json(p)?);
    }
    if let Some(k) = a.random_signs {
        let states = ChainPool::from_spec(&cfg.pool)?.n_states();
        cfg.functions = Some(sign_tables(k, states, cfg.seed));
    }
    if let Some(f) = a.family.resolve()? {
        cfg.family = Some(f);
    }
    if a.delta.is_some() {
        cfg.delta = a.delta;
    }
    if a.alpha.is_some() {
        cfg.alpha = a.alpha;
    }
    if let Some(m) = a.mode {
        cfg.mode = Some(m.into());
    }
    if let Some(p) = a.pilot_factor {
        cfg.pilot_factor = p;
    }
    if let Some(m) = &a.m_sweep {
        cfg.m_sweep = m.clone();
    }
    if let Some(r) = a.rademacher_trials {
        cfg.rademacher_trials = r;
    }
    cfg.execution = exec;
    Ok(cfg)
}

fn cmd_verify(check: VerifyCommand, exec: Execution) -> Result<bool, CliError> {
    let (name, a) = match check {
        VerifyCommand::Spectral(p) => {
            let (spec, pool) = load_pool(&p.spec)?;
            let report = verify::verify_spectral_relations(&pool, &pool_options(&p, exec))?;
            let passed = report.passed;
            let config = with_inputs(&p, serde_json::to_value(&spec)?)?;
            emit(&p.output, "verify spectral", config, report)?;
            return Ok(passed);
        }
        VerifyCommand::Mcdiarmid(a) => ("mcdiarmid", a),
        VerifyCommand::Bernstein(a) => ("bernstein", a),
        VerifyCommand::Symmetrization(a) => ("symmetrization", a),
        VerifyCommand::Generalization(a) => ("generalization", a),
    };
    let cfg = experiment(&a, exec)?;
    let command = format!("verify {name}");
    let passed = match name {
        "mcdiarmid" | "bernstein" => {
            let r = if name == "mcdiarmid" {
                verify::verify_mcdiarmid(&cfg)?
            } else {
                verify::verify_bernstein(&cfg)?
            };
            if let Some(p) = &a.csv {
                let mut w = create(p)?;
                r.write_csv(&mut w)?;
                w.flush().map_err(|e| CliError::Io(p.clone(), e))?;
            }
            let passed = r.passed;
            emit(&a.output, &command, &cfg, r)?;
            passed
        }
        "symmetrization" => {
            let r = verify::verify_symmetrization(&cfg)?;
            let passed = r.passed;
            emit(&a.output, &command, &cfg, r)?;
            passed
        }
        _ => {
            let r = verify::verify_generalization(&cfg)?;
            let passed = r.passed;
            emit(&a.output, &command, &cfg, r)?;
            passed
        }
    };
    Ok(passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(Ok(true)), EXIT_OK);
        assert_eq!(exit_code(Ok(false)), EXIT_VERIFY_FAILED);
        assert_eq!(exit_code(Err(CliError::Invalid("x".into()))), EXIT_INVALID);
        assert_eq!(exit_code(Err(mixmkl::Error::EmptyPool.into())), EXIT_INVALID);
    }

    #[test]
    fn sign_tables_are_seeded() {
        assert_eq!(sign_tables(3, 4, 1), sign_tables(3, 4, 1));
        assert!(sign_tables(5, 2, 9).iter().flatten().all(|v| v.abs() == 1.0));
    }
}
