//! `dp-erm` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dp_erm::bench::{emit_table, run_experiment, DatasetSource, ExperimentConfig, Instance, TableFormat};
use dp_erm::data::{load_csv, standardize, CsvOptions, LabelColumn};
use dp_erm::mechanisms::{NoiseKind, NoiseSpec};
use dp_erm::model_io::{write_model, Provenance};
use dp_erm::optimizers::{baseline_private_sgd, opgd, rrpsgd, Algorithm, GdConfig};
use dp_erm::sensitivity::{random_neighbor, recursion_check, trace_stability};
use dp_erm::{generate, LossKind, PrivacyBudget, RngStream, Task};

const EXIT_USAGE: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_FALSIFIED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "dp-erm", version, about = "Differentially private empirical risk minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment sweep and write results.csv and results.txt.
    Bench(BenchArgs),
    /// Train one private model and write its weights with provenance.
    Train(TrainArgs),
    /// Trace gradient-descent stability on random neighbouring datasets.
    SensitivityCheck(SensitivityArgs),
    /// Monte Carlo check of the noise samplers' second moments.
    MechanismCheck(MechanismArgs),
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Sweep configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Base seed; overrides the config file.
    #[arg(long, env = "DP_ERM_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated list.
    #[arg(long)]
    epsilons: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    mus: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated subset of opgd, rrpsgd, baseline, gd.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Any other config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Leave runtimes out of the tables so output is byte-stable.
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic source instead of a file, e.g. `kind=ridge:n=1000:d=10:noise=0.1`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Label column name (CSV input).
    #[arg(long, default_value = "y")]
    label: String,
    /// classification or regression (CSV input).
    #[arg(long, default_value = "classification")]
    task: String,
    /// Comma-separated categorical columns to one-hot encode (CSV input).
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    #[arg(long, default_value = "opgd")]
    method: String,
    #[arg(long)]
    epsilon: f64,
    /// Zero selects pure differential privacy (opgd only).
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// logistic, logistic-standard, huber or sigmoid; defaults by task.
    #[arg(long)]
    loss: Option<String>,
    /// Norm bound on the minimizer. Without it, 2|w_hat| from a non-private solve is used.
    #[arg(long)]
    d_bound: Option<f64>,
    #[arg(long, default_value_t = 50)]
    batch_size: usize,
    #[arg(long, env = "DP_ERM_SEED", default_value_t = 0)]
    seed: u64,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    /// Number of random neighbouring pairs.
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Iterations; 50 for convex, 500 for strongly convex by default.
    #[arg(long = "T")]
    t: Option<u64>,
    /// logistic or huber.
    #[arg(long, default_value = "logistic")]
    loss: String,
    #[arg(long, env = "DP_ERM_SEED", default_value_t = 0)]
    seed: u64,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MechanismArgs {
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.02)]
    rel_tol: f64,
    #[arg(long, env = "DP_ERM_SEED", default_value_t = 0)]
    seed: u64,
}

/// A failure with its exit code.
struct Failure(u8, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(EXIT_USAGE, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Bench(a) => cmd_bench(a),
        Command::Train(a) => cmd_train(a),
        Command::SensitivityCheck(a) => cmd_sensitivity(a),
        Command::MechanismCheck(a) => cmd_mechanism(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(v) = a.seed {
        overrides.push(("seed".into(), v.to_string()));
    }
    if let Some(v) = a.trials {
        overrides.push(("trials".into(), v.to_string()));
    }
    if let Some(v) = a.epsilons {
        overrides.push(("epsilons".into(), v));
    }
    if let Some(v) = a.mus {
        overrides.push(("mus".into(), v));
    }
    if let Some(v) = a.delta {
        overrides.push(("delta".into(), v.to_string()));
    }
    if let Some(v) = a.methods {
        overrides.push(("methods".into(), v));
    }
    if let Some(v) = a.batch_size {
        overrides.push(("batch_size".into(), v.to_string()));
    }
    for kv in a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure(EXIT_USAGE, format!("--set expects KEY=VALUE, got `{kv}`")))?;
        overrides.push((k.trim().into(), v.trim().into()));
    }
    for (k, v) in &overrides {
        cfg.set(k, v).map_err(|m| Failure(EXIT_USAGE, format!("--{k}: {m}")))?;
    }
    cfg.validate().map_err(|m| Failure(EXIT_USAGE, m))?;

    let sweep = run_experiment(&cfg);
    for f in &sweep.failures {
        eprintln!("cell failed: {f}");
    }
    if sweep.records.is_empty() {
        return Err(Failure(EXIT_PARTIAL, "every cell failed".into()));
    }
    std::fs::create_dir_all(&a.out)?;
    let include_runtime = !a.no_runtime;
    write_file(&a.out.join("results.csv"), &emit_table(&sweep.records, TableFormat::Csv, include_runtime)?)?;
    let text = emit_table(&sweep.records, TableFormat::Text, include_runtime)?;
    write_file(&a.out.join("results.txt"), &text)?;
    print!("{text}");
    if sweep.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure(EXIT_PARTIAL, format!("{} cell(s) failed", sweep.failures.len())))
    }
}

fn parse_loss(s: &str) -> Result<LossKind, Failure> {
    Ok(match s {
        "logistic" => LossKind::logistic(),
        "logistic-standard" => LossKind::Logistic(dp_erm::LogisticForm::Standard),
        "huber" => LossKind::huber(),
        "sigmoid" => LossKind::SquaredSigmoid,
        other => return Err(Failure(EXIT_USAGE, format!("unknown loss `{other}`"))),
    })
}

fn cmd_train(a: TrainArgs) -> Result<(), Failure> {
    let method: Algorithm = a.method.parse()?;
    if method == Algorithm::Gd {
        return Err(Failure(EXIT_USAGE, "--method must be opgd, rrpsgd or baseline".into()));
    }
    if method != Algorithm::Opgd && a.delta == 0.0 {
        return Err(Failure(
            EXIT_USAGE,
            format!("{method} requires delta > 0; pass --delta in (0, 1)"),
        ));
    }
    let budget = PrivacyBudget::new(a.epsilon, a.delta)?;
    let (data, default_loss) = match (&a.data, &a.synthetic) {
        (Some(path), _) => {
            let task: Task = a.task.parse()?;
            let opts = CsvOptions {
                label: LabelColumn::Name(a.label.clone()),
                task,
                categorical: a.categorical.clone(),
            };
            let data = standardize(&load_csv(path, &opts)?)?;
            let loss = if task == Task::Classification { LossKind::logistic() } else { LossKind::huber() };
            (data, loss)
        }
        (None, Some(spec)) => {
            let source = DatasetSource::parse(&format!("synthetic:{spec}"), a.seed).map_err(|m| Failure(EXIT_USAGE, m))?;
            let DatasetSource::Synthetic { spec, loss, .. } = source else { unreachable!() };
            let data = generate(&spec)?;
            let default = match spec.kind {
                dp_erm::SyntheticKind::RidgeRegression => LossKind::huber(),
                dp_erm::SyntheticKind::LogisticSeparable => LossKind::logistic(),
                dp_erm::SyntheticKind::SigmoidNonconvex => LossKind::SquaredSigmoid,
            };
            (data, loss.unwrap_or(default))
        }
        (None, None) => return Err(Failure(EXIT_USAGE, "one of --data or --synthetic is required".into())),
    };
    let loss = a.loss.as_deref().map(parse_loss).transpose()?.unwrap_or(default_loss);

    let inst = Instance::new(data, loss, a.mu, 1e-8, 1_000_000)?;
    let d_bound = a.d_bound.unwrap_or(inst.d_bound);
    let model = inst.model.with_domain_radius(2.0 * d_bound);
    let seed = RngStream::new(a.seed, 0);
    let sol = match method {
        Algorithm::Opgd => opgd(&model, &inst.data, budget, d_bound, Default::default(), seed)?,
        Algorithm::Rrpsgd => rrpsgd(&model, &inst.data, budget, Default::default(), seed)?,
        Algorithm::Baseline => baseline_private_sgd(
            &model,
            &inst.data,
            budget,
            a.batch_size.min(inst.data.len()),
            d_bound,
            Default::default(),
            seed,
        )?,
        Algorithm::Gd => unreachable!(),
    };
    let prov = Provenance::from_solution(&sol);
    let file = std::fs::File::create(&a.out).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", a.out.display())))?;
    write_model(&prov, &sol.w_priv, std::io::BufWriter::new(file))?;
    println!(
        "{method}: n={} d={} iterations={} noise={} sigma={:.6e} error={:.6e}",
        inst.data.len(),
        inst.data.dim(),
        sol.iterations_run,
        prov.noise,
        prov.sigma,
        inst.error(&sol.w_priv)
    );
    if a.d_bound.is_none() {
        println!("note: D was estimated from a non-private solve and is outside the privacy guarantee");
    }
    Ok(())
}

fn cmd_sensitivity(a: SensitivityArgs) -> Result<(), Failure> {
    if a.pairs == 0 {
        return Err(Failure(EXIT_USAGE, "--pairs must be at least 1".into()));
    }
    let loss = parse_loss(&a.loss)?;
    let kind = match loss {
        LossKind::Logistic(_) => dp_erm::SyntheticKind::LogisticSeparable,
        LossKind::Huber { .. } => dp_erm::SyntheticKind::RidgeRegression,
        LossKind::SquaredSigmoid => {
            return Err(Failure(EXIT_USAGE, "stability bounds need a convex loss".into()));
        }
    };
    let data = generate(&dp_erm::SyntheticSpec {
        kind,
        n: a.n,
        d: a.d,
        noise_level: 0.1,
        seed: RngStream::new(a.seed, 0),
    })?;
    let t = a.t.unwrap_or(if a.mu > 0.0 { 500 } else { 50 });
    let inst = Instance::new(data, loss, a.mu, 1e-10, 1_000_000)?;
    let model = inst.model;
    let lipschitz = model.certify_constants().lipschitz;
    let cfg = GdConfig::from_origin(GdConfig::step_limit(&model), t, a.d);
    let mut rng = RngStream::new(a.seed, 1).rng();

    let mut csv = String::from("n,mu,eta,T,max_delta,bound,ok\n");
    let mut violations = 0;
    for _ in 0..a.pairs {
        let pair = random_neighbor(&inst.data, &mut rng)?;
        let trace = trace_stability(&model, &pair, &cfg)?;
        let ok = trace.within_bound()
            && !trace.left_ball
            && (a.mu > 0.0 || recursion_check(&trace, lipschitz, cfg.eta, a.n));
        if !ok {
            violations += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            a.n,
            a.mu,
            cfg.eta,
            t,
            trace.max_delta(),
            trace.bound,
            ok
        ));
    }
    match &a.out {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    if violations > 0 {
        return Err(Failure(EXIT_FALSIFIED, format!("{violations} of {} pairs violated the bound", a.pairs)));
    }
    Ok(())
}

fn cmd_mechanism(a: MechanismArgs) -> Result<(), Failure> {
    if a.samples == 0 || a.d == 0 || !(a.sigma > 0.0) || !(a.rel_tol > 0.0) {
        return Err(Failure(EXIT_USAGE, "--samples, --d, --sigma and --rel-tol must be positive".into()));
    }
    let mut worst = 0.0f64;
    for (i, kind) in [NoiseKind::GammaLaplace, NoiseKind::Gaussian].into_iter().enumerate() {
        let spec = NoiseSpec {
            kind,
            scale: a.sigma,
            dimension: a.d,
        };
        let mut rng = RngStream::new(a.seed, i as u64).rng();
        let draws: Vec<f64> = (0..a.samples)
            .map(|_| spec.sample(&mut rng).map(|z| dp_erm::linalg::norm_sq(&z)))
            .collect::<Result<_, _>>()?;
        let observed = dp_erm::linalg::mean(&draws);
        let expected = spec.expected_sq_norm();
        let rel = (observed - expected).abs() / expected;
        worst = worst.max(rel);
        println!(
            "{kind}: d={} sigma={} samples={} E|z|^2 expected={expected} observed={observed:.6} rel_err={rel:.3e}",
            a.d, a.sigma, a.samples
        );
    }
    if worst > a.rel_tol {
        return Err(Failure(EXIT_FALSIFIED, format!("relative error {worst:.3e} exceeds --rel-tol {}", a.rel_tol)));
    }
    Ok(())
}
