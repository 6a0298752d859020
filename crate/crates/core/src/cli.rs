//! Command-line driver: `train`, `predict`, `eval`, `bench` and `synth`.
//!
//! Exit codes: 0 success (or certified gap), 1 usage error, 2 I/O or parse
//! error, 3 iteration budget exhausted without a certificate.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{synth_blobs, BlobConfig, Dataset};
use crate::error::Error;
use crate::loss::{default_weights, LossFamily, LossSpec};
use crate::metrics::topk_error;
use crate::model::Model;
use crate::pg::{pg_train, PgConfig};
use crate::solver::{train, FrankWolfe, Smoothing, SolverConfig, StepRule};
use crate::trace::{format_float, write_trace, TraceFormat, TraceRecord, TRACE_HEADER};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NOT_CERTIFIED: u8 = 3;

const DEFAULT_TOPK: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Parser)]
#[command(name = "fwsvm", version, about = "Frank-Wolfe training of multi-category linear SVMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model by dual Frank-Wolfe.
    Train(TrainArgs),
    /// Write the top-k labels of every example.
    Predict(PredictArgs),
    /// Write a `k,error` table of top-k error ratios.
    Eval(PredictArgs),
    /// Compare optimizers on a fixed iteration budget.
    Bench(BenchArgs),
    /// Generate a Gaussian blob dataset in svmlight format.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Mh,
    Utk,
    Uu,
    Wtk,
    Wu,
}

impl From<LossArg> for LossFamily {
    fn from(value: LossArg) -> Self {
        match value {
            LossArg::Mh => LossFamily::MaxHinge,
            LossArg::Utk => LossFamily::UnweightedTopK,
            LossArg::Uu => LossFamily::UnweightedUsunier,
            LossArg::Wtk => LossFamily::WeightedTopK,
            LossArg::Wu => LossFamily::WeightedUsunier,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Linesearch,
    Schedule,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Training data in svmlight format.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "mh")]
    pub loss: LossArg,
    /// Subset size for `utk` and `uu`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Weights for `wtk` and `wu`: a comma list or `paper-default`.
    #[arg(long)]
    pub rho: Option<String>,
    /// Regularization strength: a number, `1/n` or `<c>/n`.
    #[arg(long, default_value = "1/n")]
    pub lambda: String,
    /// Moreau smoothing parameter; 0 disables smoothing.
    #[arg(long = "gamma-sm", default_value_t = 0.0)]
    pub gamma_sm: f64,
    /// Divide each feature by its largest absolute value before training.
    #[arg(long = "max-abs-scale")]
    pub max_abs_scale: bool,
    /// Accepted for interface uniformity; the optimizers draw no randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Sequential reductions and zeroed timings for reproducible output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Stop once the duality gap is at most this.
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long = "max-iters", default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value = "linesearch")]
    pub step: StepArg,
    /// Iterations between gap checks.
    #[arg(long = "gap-every", default_value_t = 1)]
    pub gap_every: usize,
    /// Model output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV output path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma list of k values (default 1,3,5,10, capped at the class count).
    #[arg(long, value_delimiter = ',')]
    pub topk: Option<Vec<usize>>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma list drawn from `lsfw`, `stdfw` and `pg`.
    #[arg(long, default_value = "lsfw,stdfw,pg", value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Iteration cap for the reference run.
    #[arg(long = "ref-max-iters", default_value_t = 100_000)]
    pub ref_max_iters: usize,
    /// PG projection radius; 0 picks it from the objective at zero.
    #[arg(long, default_value_t = 0.0)]
    pub radius: f64,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value_t = 20)]
    pub d0: usize,
    #[arg(long = "n-per-class", default_value_t = 50)]
    pub n_per_class: usize,
    /// Norm of every class mean.
    #[arg(long, default_value_t = BlobConfig::STANDARD_SEPARATION)]
    pub sep: f64,
    #[arg(long, default_value_t = BlobConfig::STANDARD_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: error.into(),
    }
}

/// Classifies library errors: bad parameters are usage errors, everything
/// touching files or their contents is a data error.
fn classify(error: Error) -> Failure {
    let code = match error {
        Error::InvalidLoss(_) | Error::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    };
    Failure {
        code,
        error: error.into(),
    }
}

trait OrFail<T> {
    fn or_fail(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> OrFail<T> for crate::error::Result<T> {
    fn or_fail(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| {
            let mut f = classify(e);
            f.error = f.error.context(what());
            f
        })
    }
}

fn io_fail<T>(r: io::Result<T>, what: impl FnOnce() -> String) -> CliResult<T> {
    r.map_err(|e| Failure {
        code: EXIT_DATA,
        error: anyhow::Error::new(e).context(what()),
    })
}

/// Parses `args` and runs the command, printing errors to stderr. Returns
/// the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Train(args) => {
            let threads = args.problem.threads;
            with_threads(threads, || cmd_train(&args))
        }
        Command::Predict(args) => cmd_predict(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Bench(args) => {
            let threads = args.problem.threads;
            with_threads(threads, || cmd_bench(&args))
        }
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn with_threads<F>(threads: usize, f: F) -> CliResult<u8>
where
    F: FnOnce() -> CliResult<u8> + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(usage)?;
    pool.install(f)
}

/// Parses `--lambda`: a positive number or `<c>/n`.
pub fn parse_lambda(text: &str, n: usize) -> anyhow::Result<f64> {
    let text = text.trim();
    let value = match text.strip_suffix("/n") {
        Some(coef) => {
            let coef: f64 = coef
                .trim()
                .parse()
                .with_context(|| format!("bad lambda coefficient in `{text}`"))?;
            coef / n as f64
        }
        None => text
            .parse()
            .with_context(|| format!("bad lambda `{text}`"))?,
    };
    if !(value > 0.0 && value.is_finite()) {
        return Err(anyhow!("lambda must be positive, got `{text}`"));
    }
    Ok(value)
}

/// Parses `--rho` for `classes` classes.
pub fn parse_rho(text: &str, classes: usize) -> anyhow::Result<Vec<f64>> {
    if text.trim() == "paper-default" {
        return Ok(default_weights(classes));
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad weight `{t}` in --rho"))
        })
        .collect()
}

/// Builds the loss for `classes` classes from the flags. Weighted families
/// default to `paper-default` weights.
pub fn loss_from_flags(
    loss: LossArg,
    k: Option<usize>,
    rho: Option<&str>,
    classes: usize,
) -> anyhow::Result<LossSpec> {
    let family = LossFamily::from(loss);
    if k.is_some() && !family.needs_k() {
        return Err(anyhow!("--k applies only to utk and uu, not `{family}`"));
    }
    if rho.is_some() && !family.is_weighted() {
        return Err(anyhow!("--rho applies only to wtk and wu, not `{family}`"));
    }
    if family.needs_k() && k.is_none() {
        return Err(anyhow!("loss `{family}` requires --k"));
    }
    let rho = if family.is_weighted() {
        Some(parse_rho(rho.unwrap_or("paper-default"), classes)?)
    } else {
        None
    };
    Ok(LossSpec::new(family, classes, k, rho)?)
}

struct Problem {
    data: Dataset,
    spec: LossSpec,
    lambda: f64,
    smoothing: Smoothing,
    /// Per-feature divisors applied to the data, if scaling was requested.
    scale: Option<Vec<f64>>,
}

fn load_data(path: &Path) -> CliResult<Dataset> {
    Dataset::load_svmlight(path).or_fail(|| format!("reading {}", path.display()))
}

fn load_problem(args: &ProblemArgs) -> CliResult<Problem> {
    if !(args.gamma_sm >= 0.0 && args.gamma_sm.is_finite()) {
        return Err(usage(anyhow!("--gamma-sm must be non-negative")));
    }
    let mut data = load_data(&args.data)?;
    let spec = loss_from_flags(args.loss, args.k, args.rho.as_deref(), data.classes()).map_err(usage)?;
    let lambda = parse_lambda(&args.lambda, data.len()).map_err(usage)?;
    let scale = args.max_abs_scale.then(|| data.max_abs_scale());
    Ok(Problem {
        data,
        spec,
        lambda,
        smoothing: Smoothing::from_gamma(args.gamma_sm),
        scale,
    })
}

/// Undoes feature scaling so that the model applies to raw features.
fn unscale(model: Model, scale: Option<&[f64]>) -> CliResult<Model> {
    let Some(scale) = scale else {
        return Ok(model);
    };
    let mut weights = model.weights().clone();
    for (mut row, &s) in weights.rows_mut().into_iter().zip(scale) {
        row.mapv_inplace(|w| w / s);
    }
    Model::new(
        weights,
        model.labels().to_vec(),
        model.loss().clone(),
        model.lambda(),
        model.gamma_sm(),
    )
    .or_fail(|| "rescaling model".into())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    io_fail(File::create(path), || format!("creating {}", path.display())).map(BufWriter::new)
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn save_trace(path: &Path, records: &[TraceRecord], deterministic: bool) -> CliResult<()> {
    let mut out = create(path)?;
    write_trace(&mut out, records, TraceFormat { zero_elapsed: deterministic })
        .or_fail(|| format!("writing {}", path.display()))?;
    io_fail(out.flush(), || format!("writing {}", path.display()))
}

fn cmd_train(args: &TrainArgs) -> CliResult<u8> {
    let problem = load_problem(&args.problem)?;
    let config = SolverConfig {
        lambda: problem.lambda,
        smoothing: problem.smoothing,
        epsilon: args.eps,
        max_iters: args.max_iters,
        step_rule: match args.step {
            StepArg::Linesearch => StepRule::LineSearch,
            StepArg::Schedule => StepRule::Schedule,
        },
        gap_stride: args.gap_every,
        deterministic: args.problem.deterministic,
        ..SolverConfig::new(problem.lambda)
    };
    let outcome = train(&problem.data, &problem.spec, &config).or_fail(|| "training".into())?;
    let model = unscale(outcome.model, problem.scale.as_deref())?;
    if let Some(path) = &args.out {
        model.save(path).or_fail(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.trace {
        save_trace(path, &outcome.trace, args.problem.deterministic)?;
    }
    if outcome.converged {
        println!(
            "certified gap {} after {} iterations",
            format_float(outcome.final_gap),
            outcome.iterations
        );
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "iteration budget {} exhausted with gap {} > {}",
            args.max_iters,
            format_float(outcome.final_gap),
            args.eps
        );
        Ok(EXIT_NOT_CERTIFIED)
    }
}

fn resolve_topk(requested: Option<&[usize]>, classes: usize) -> CliResult<Vec<usize>> {
    let ks = match requested {
        Some(ks) => ks.to_vec(),
        None => {
            let ks: Vec<usize> = DEFAULT_TOPK.iter().copied().filter(|&k| k <= classes).collect();
            if ks.is_empty() {
                vec![classes]
            } else {
                ks
            }
        }
    };
    if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k > classes) {
        return Err(usage(anyhow!("top-k size {bad} must lie in 1..={classes}")));
    }
    Ok(ks)
}

/// Loads the model and data with labels in the model's class order.
fn load_eval_inputs(args: &PredictArgs) -> CliResult<(Model, Dataset, Vec<usize>)> {
    let model = Model::load(&args.model).or_fail(|| format!("reading {}", args.model.display()))?;
    let ks = resolve_topk(args.topk.as_deref(), model.classes())?;
    let data = load_data(&args.data)?;
    if data.dim() > model.dim() {
        return Err(classify(Error::Dimension {
            expected: model.dim(),
            actual: data.dim(),
        }))
        .map_err(|mut f| {
            f.error = f.error.context("data has more features than the model");
            f
        });
    }
    Ok((model, data, ks))
}

fn cmd_predict(args: &PredictArgs) -> CliResult<u8> {
    let (model, data, ks) = load_eval_inputs(args)?;
    let k = ks.iter().copied().max().unwrap_or(1);
    let mut out = output(args.out.as_deref())?;
    let write_err = || "writing predictions".to_string();
    for x in data.features() {
        let labels = model.predict_topk_labels(x, k).or_fail(|| "scoring".into())?;
        io_fail(writeln!(out, "{}", labels.join("\t")), write_err)?;
    }
    io_fail(out.flush(), write_err)?;
    Ok(EXIT_OK)
}

fn cmd_eval(args: &PredictArgs) -> CliResult<u8> {
    let (model, data, ks) = load_eval_inputs(args)?;
    let data = data.align_labels(model.labels()).or_fail(|| "matching labels".into())?;
    let errors = topk_error(&model, &data, &ks).or_fail(|| "evaluating".into())?;
    let mut out = output(args.out.as_deref())?;
    let write_err = || "writing evaluation".to_string();
    io_fail(writeln!(out, "k,error"), write_err)?;
    for k in &ks {
        io_fail(writeln!(out, "{k},{}", format_float(errors[k])), write_err)?;
    }
    io_fail(out.flush(), write_err)?;
    Ok(EXIT_OK)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Lsfw,
    Stdfw,
    Pg,
}

impl Method {
    fn parse(name: &str) -> anyhow::Result<Method> {
        match name.trim() {
            "lsfw" => Ok(Method::Lsfw),
            "stdfw" => Ok(Method::Stdfw),
            "pg" => Ok(Method::Pg),
            other => Err(anyhow!("unknown method `{other}` (expected lsfw, stdfw or pg)")),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Lsfw => "lsfw",
            Method::Stdfw => "stdfw",
            Method::Pg => "pg",
        }
    }
}

/// Runs Frank-Wolfe for exactly `iters` updates, recording every iterate.
pub fn fw_fixed_budget(
    data: &Dataset,
    spec: &LossSpec,
    config: SolverConfig,
    iters: usize,
) -> crate::error::Result<Vec<TraceRecord>> {
    let mut solver = FrankWolfe::new(data, spec, config)?;
    let mut trace = Vec::with_capacity(iters + 1);
    for t in 0..=iters {
        trace.push(solver.record());
        if t < iters {
            solver.step();
        }
    }
    Ok(trace)
}

fn write_bench_trace(path: &Path, records: &[TraceRecord], reference: f64, deterministic: bool) -> CliResult<()> {
    let mut out = create(path)?;
    let write_err = || format!("writing {}", path.display());
    io_fail(writeln!(out, "{TRACE_HEADER},primal_error"), write_err)?;
    for r in records {
        let elapsed = if deterministic { 0.0 } else { r.elapsed_sec };
        io_fail(
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration,
                format_float(elapsed),
                format_float(r.primal),
                format_float(r.dual),
                format_float(r.gap),
                format_float(r.primal - reference)
            ),
            write_err,
        )?;
    }
    io_fail(out.flush(), write_err)
}

fn cmd_bench(args: &BenchArgs) -> CliResult<u8> {
    let methods = args
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(usage)?;
    let problem = load_problem(&args.problem)?;
    let deterministic = args.problem.deterministic;
    let base = SolverConfig {
        lambda: problem.lambda,
        smoothing: problem.smoothing,
        deterministic,
        ..SolverConfig::new(problem.lambda)
    };

    let reference = train(
        &problem.data,
        &problem.spec,
        &SolverConfig {
            max_iters: args.ref_max_iters,
            ..base
        },
    )
    .or_fail(|| "reference run".into())?;
    let last = reference.trace.last().copied().expect("trace is never empty");
    if !reference.converged {
        eprintln!(
            "warning: reference run stopped at gap {} after {} iterations",
            format_float(last.gap),
            reference.iterations
        );
    }
    let p_ref = last.primal;

    io_fail(fs::create_dir_all(&args.out_dir), || {
        format!("creating {}", args.out_dir.display())
    })?;
    let mut summary = Vec::new();
    for method in methods {
        let started = Instant::now();
        let trace = match method {
            Method::Lsfw | Method::Stdfw => {
                let config = SolverConfig {
                    step_rule: if method == Method::Lsfw {
                        StepRule::LineSearch
                    } else {
                        StepRule::Schedule
                    },
                    ..base
                };
                fw_fixed_budget(&problem.data, &problem.spec, config, args.iters)
                    .or_fail(|| format!("running {}", method.name()))?
            }
            Method::Pg => {
                let config = PgConfig {
                    lambda: problem.lambda,
                    max_iters: args.iters,
                    radius: args.radius,
                    deterministic,
                };
                pg_train(&problem.data, &problem.spec, &config)
                    .or_fail(|| "running pg".into())?
                    .trace
            }
        };
        let elapsed = if deterministic { 0.0 } else { started.elapsed().as_secs_f64() };
        let path = args.out_dir.join(format!("{}.csv", method.name()));
        write_bench_trace(&path, &trace, p_ref, deterministic)?;
        let last = trace.last().copied().expect("trace is never empty");
        summary.push((method, last, elapsed));
    }

    let path = args.out_dir.join("summary.csv");
    let mut out = create(&path)?;
    let write_err = || format!("writing {}", path.display());
    io_fail(writeln!(out, "method,iters,elapsed_sec,primal,dual,gap"), write_err)?;
    for (method, r, elapsed) in &summary {
        io_fail(
            writeln!(
                out,
                "{},{},{},{},{},{}",
                method.name(),
                r.iteration,
                format_float(*elapsed),
                format_float(r.primal),
                format_float(r.dual),
                format_float(r.gap)
            ),
            write_err,
        )?;
    }
    io_fail(out.flush(), write_err)?;
    Ok(EXIT_OK)
}

fn cmd_synth(args: &SynthArgs) -> CliResult<u8> {
    let config = BlobConfig {
        classes: args.m,
        dim: args.d0,
        per_class: args.n_per_class,
        separation: args.sep,
        sigma: args.sigma,
        seed: args.seed,
    };
    let data = synth_blobs(&config).or_fail(|| "generating blobs".into())?;
    let mut out = output(args.out.as_deref())?;
    data.write_svmlight(&mut out).or_fail(|| "writing dataset".into())?;
    io_fail(out.flush(), || "writing dataset".into())?;
    Ok(EXIT_OK)
}
