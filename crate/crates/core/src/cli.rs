//! The `hetvar` command line.
//!
//! Every subcommand accepts `--config FILE`, a flat `key = value` file whose
//! keys are the long flag names (`b-tilde` or `b_tilde`). Flags given on the
//! command line override the file. Results go to the CSV named by `--out`
//! and a one-line summary goes to stdout.
//!
//! Exit codes: `0` success, `1` a pipeline error or a failed gradient
//! check, `2` a usage or configuration error.
//!
//! Set `HETVAR_THREADS` to bound the worker pool; output does not depend
//! on the thread count.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::bootstrap::CiConfig;
use crate::error::Error;
use crate::eval::{
    run_coverage_experiment, run_real_data_study, run_variance_benchmark, write_benchmark_csv,
    write_coverage_csv, write_real_data_csv, CiMethod, Estimator, RealDataConfig,
};
use crate::io::{load_csv, minmax_scale, read_config, write_scenario_csv};
use crate::relu_net::{gradcheck, NetworkArch, TrainConfig};
use crate::scenarios::ScenarioSpec;
use crate::variance::{Strategy, VarianceFitConfig, VarianceKind};

pub const THREADS_ENV: &str = "HETVAR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hetvar", version, about = "Conditional variance estimation and bootstrap confidence intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare backpropagation against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Benchmark variance estimators on a synthetic scenario.
    SimulateVariance(SimulateArgs),
    /// Coverage and relative length of confidence intervals on a scenario.
    CiBenchmark(CiArgs),
    /// Prediction-interval coverage on a tabular dataset.
    RealData(RealDataArgs),
    /// Write one synthetic sample to CSV.
    MakeScenarioCsv(ScenarioCsvArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Hidden layers [default: 2]
    #[arg(long)]
    depth: Option<usize>,
    /// Units per hidden layer [default: 64]
    #[arg(long)]
    width: Option<usize>,
    /// Training epochs for base fits [default: 200]
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam step size [default: 0.001]
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// First seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds per architecture [default: 3]
    #[arg(long)]
    seeds: Option<u64>,
    /// Random inputs per check [default: 16]
    #[arg(long)]
    samples: Option<usize>,
    /// Check one architecture instead of the built-in three (needs --depth and --width too)
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// [default: gradcheck.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario id 1..=5 (required)
    #[arg(long)]
    scenario: Option<u8>,
    /// Sample size [default: 1000]
    #[arg(long)]
    n: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    trials: Option<usize>,
    /// full | split [default: full]
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated: NN_res, NN_dir, NN_hom, oracle [default: NN_res,NN_dir]
    #[arg(long)]
    estimators: Option<String>,
    #[command(flatten)]
    train: TrainArgs,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: variance_mse.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CiArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario id 1..=5 (required)
    #[arg(long)]
    scenario: Option<u8>,
    /// [default: 2000]
    #[arg(long)]
    n: Option<usize>,
    /// [default: 0.1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Replicates scored for calibration [default: 100]
    #[arg(long)]
    b: Option<usize>,
    /// Replicates averaged into the center [default: 50]
    #[arg(long)]
    b_tilde: Option<usize>,
    /// Comma-separated: NN, NN_Emp, Naive, Standard [default: NN,NN_Emp,Naive]
    #[arg(long)]
    methods: Option<String>,
    /// [default: 5]
    #[arg(long)]
    datasets: Option<usize>,
    /// Fresh covariates per dataset [default: 20]
    #[arg(long)]
    new_points: Option<usize>,
    /// Clip bound [default: max |y|]
    #[arg(long)]
    a_n: Option<f64>,
    /// Power of ln n in the theoretical corrections [default: 2]
    #[arg(long)]
    log_power: Option<f64>,
    /// Epochs for bootstrap refits [default: 40]
    #[arg(long)]
    replicate_epochs: Option<usize>,
    /// Pairs-bootstrap resamples [default: 200]
    #[arg(long)]
    standard_resamples: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: coverage.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RealDataArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV with a header row (required)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated feature columns [default: MedInc,AveOccup,Population]
    #[arg(long)]
    features: Option<String>,
    /// [default: MedHouseVal]
    #[arg(long)]
    target: Option<String>,
    /// Model log(target) [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    log_target: Option<bool>,
    /// Training rows per split [default: 3/4 of the rows]
    #[arg(long)]
    train_size: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    splits: Option<usize>,
    /// Comma-separated levels [default: 0.05,0.1]
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated: res, dir, hom [default: res,dir]
    #[arg(long)]
    methods: Option<String>,
    /// full | split [default: full]
    #[arg(long)]
    strategy: Option<String>,
    /// Also record bootstrap confidence-interval lengths [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    ci: Option<bool>,
    /// [default: 40]
    #[arg(long)]
    b: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    b_tilde: Option<usize>,
    /// [default: 40]
    #[arg(long)]
    replicate_epochs: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: real_data.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScenarioCsvArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario id 1..=5 (required)
    #[arg(long)]
    scenario: Option<u8>,
    /// [default: 1000]
    #[arg(long)]
    n: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: scenario_<id>.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage { command: &'static str, message: String },
    Run(Error),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Flag values layered over a config file.
struct Settings {
    command: &'static str,
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(command: &'static str, path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        let sub = Cli::command();
        let sub = sub.find_subcommand(command).expect("subcommand is registered");
        let known: Vec<String> = sub.get_arguments().map(|a| a.get_id().to_string()).collect();
        if let Some(bad) = file.keys().find(|k| *k == "config" || !known.contains(k)) {
            return Err(CliError::Usage {
                command,
                message: format!("unknown config key `{bad}`"),
            });
        }
        Ok(Self { command, file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| CliError::Usage {
                command: self.command,
                message: format!("config key `{key}`: cannot parse {raw:?}: {e}"),
            }),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        self.get(flag, key)?.ok_or_else(|| CliError::Usage {
            command: self.command,
            message: format!("missing required argument --{}", key.replace('_', "-")),
        })
    }

    fn list<T: FromStr>(&self, flag: Option<String>, key: &str, default: &str) -> CliResult<Vec<T>>
    where
        T::Err: Display,
    {
        let raw = self.or(flag, key, default.to_string())?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e| CliError::Usage {
                    command: self.command,
                    message: format!("`{key}` entry {s:?}: {e}"),
                })
            })
            .collect()
    }

    fn train(&self, args: TrainArgs, input_dim: usize) -> CliResult<(NetworkArch, TrainConfig)> {
        let arch = NetworkArch::new(
            input_dim,
            self.or(args.depth, "depth", 2)?,
            self.or(args.width, "width", 64)?,
        )?;
        let cfg = TrainConfig {
            epochs: self.or(args.epochs, "epochs", 200)?,
            batch_size: self.or(args.batch_size, "batch_size", 32)?,
            learning_rate: self.or(args.learning_rate, "learning_rate", 1e-3)?,
            seed: 0,
        };
        cfg.validate()?;
        Ok((arch, cfg))
    }
}

fn create(path: &Path) -> CliResult<std::fs::File> {
    Ok(std::fs::File::create(path).map_err(Error::io(path))?)
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A pool already built by an earlier call in this process is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    let outcome = match cli.command {
        Command::Gradcheck(a) => run_gradcheck(a),
        Command::SimulateVariance(a) => run_simulate(a),
        Command::CiBenchmark(a) => run_ci(a),
        Command::RealData(a) => run_real(a),
        Command::MakeScenarioCsv(a) => run_scenario_csv(a),
    };
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage { command, message }) => {
            eprintln!("error: {message}\n");
            let mut cmd = Cli::command();
            cmd.build();
            let sub = cmd.find_subcommand_mut(command).expect("subcommand is registered");
            eprintln!("{}", sub.render_usage());
            2
        }
        Err(CliError::Run(e @ Error::InvalidConfig(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(CliError::Failed(summary)) => {
            println!("{summary}");
            1
        }
    }
}

const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn run_gradcheck(a: GradcheckArgs) -> CliResult<String> {
    let s = Settings::load("gradcheck", a.config.as_deref())?;
    let seed = s.or(a.seed, "seed", 1)?;
    let seeds = s.or(a.seeds, "seeds", 3)?;
    let samples = s.or(a.samples, "samples", 16)?;
    let single = (
        s.get(a.input_dim, "input_dim")?,
        s.get(a.depth, "depth")?,
        s.get(a.width, "width")?,
    );
    let arches = match single {
        (None, None, None) => vec![
            NetworkArch::new(2, 1, 4)?,
            NetworkArch::new(2, 2, 8)?,
            NetworkArch::new(5, 2, 8)?,
        ],
        (Some(d), Some(l), Some(w)) => vec![NetworkArch::new(d, l, w)?],
        _ => {
            return Err(CliError::Usage {
                command: "gradcheck",
                message: "--input-dim, --depth and --width go together".into(),
            })
        }
    };
    let out = s.or(a.out, "out", PathBuf::from("gradcheck.csv"))?;

    let mut w = csv::Writer::from_writer(create(&out)?);
    w.write_record(["input_dim", "depth", "width", "seed", "params", "max_rel_error"])
        .map_err(Error::from)?;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for arch in &arches {
        for k in 0..seeds {
            let r = gradcheck(*arch, seed + k, samples);
            worst = worst.max(r.max_rel_error);
            checks += 1;
            w.write_record([
                arch.input_dim().to_string(),
                arch.depth().to_string(),
                arch.width().to_string(),
                (seed + k).to_string(),
                r.param_count.to_string(),
                r.max_rel_error.to_string(),
            ])
            .map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::io(&out))?;
    let ok = worst < GRADCHECK_TOLERANCE;
    let summary = format!(
        "gradcheck: max relative error {worst:e} over {checks} checks (tolerance {GRADCHECK_TOLERANCE:e}): {} -> {}",
        if ok { "ok" } else { "FAILED" },
        out.display()
    );
    if ok {
        Ok(summary)
    } else {
        Err(CliError::Failed(summary))
    }
}

fn run_simulate(a: SimulateArgs) -> CliResult<String> {
    let s = Settings::load("simulate-variance", a.config.as_deref())?;
    let spec = ScenarioSpec::new(s.required(a.scenario, "scenario")?)?;
    let n = s.or(a.n, "n", 1000)?;
    let trials = s.or(a.trials, "trials", 10)?;
    let strategy: Strategy = s.or(a.strategy, "strategy", "full".to_string())?.parse()?;
    let estimators: Vec<Estimator> = s.list(a.estimators, "estimators", "NN_res,NN_dir")?;
    let (arch, train) = s.train(a.train, spec.dim())?;
    let seed = s.or(a.seed, "seed", 0)?;
    let out = s.or(a.out, "out", PathBuf::from("variance_mse.csv"))?;

    let fit = VarianceFitConfig {
        mean_arch: arch,
        mean_train: train,
        var_arch: arch,
        var_train: train,
        mean_clip: None,
        var_clip: None,
    };
    let reports = run_variance_benchmark(spec, n, trials, strategy, &estimators, &fit, seed)?;
    write_benchmark_csv(&reports, create(&out)?)?;
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {:.4} ({:.4})", r.estimator.name(), r.mean, r.std))
        .collect();
    Ok(format!(
        "simulate-variance: scenario {}, n={n}, {trials} trials, {}: {} -> {}",
        spec.id(),
        strategy.name(),
        parts.join(", "),
        out.display()
    ))
}

fn run_ci(a: CiArgs) -> CliResult<String> {
    let s = Settings::load("ci-benchmark", a.config.as_deref())?;
    let spec = ScenarioSpec::new(s.required(a.scenario, "scenario")?)?;
    let n = s.or(a.n, "n", 2000)?;
    let methods: Vec<CiMethod> = s.list(a.methods, "methods", "NN,NN_Emp,Naive")?;
    let datasets = s.or(a.datasets, "datasets", 5)?;
    let new_points = s.or(a.new_points, "new_points", 20)?;
    let (arch, train) = s.train(a.train, spec.dim())?;
    let cfg = CiConfig {
        alpha: s.or(a.alpha, "alpha", 0.1)?,
        b: s.or(a.b, "b", 100)?,
        b_tilde: s.or(a.b_tilde, "b_tilde", 50)?,
        a_n: s.get(a.a_n, "a_n")?,
        log_power: s.or(a.log_power, "log_power", 2.0)?,
        mean_arch: arch,
        var_arch: arch,
        mean_train: train,
        var_train: train,
        replicate_train: train.with_epochs(s.or(a.replicate_epochs, "replicate_epochs", 40)?),
        standard_resamples: s.or(a.standard_resamples, "standard_resamples", 200)?,
        ..CiConfig::experiment_default(spec.dim())?
    };
    cfg.validate()?;
    let seed = s.or(a.seed, "seed", 0)?;
    let out = s.or(a.out, "out", PathBuf::from("coverage.csv"))?;

    let reports = run_coverage_experiment(spec, n, &cfg, &methods, datasets, new_points, seed)?;
    write_coverage_csv(&reports, create(&out)?)?;
    let parts: Vec<String> = reports
        .iter()
        .map(|r| match r.prange {
            Some(p) => format!("{} cov {:.3} prange {:.3}", r.method.name(), r.coverage, p),
            None => format!("{} cov {:.3}", r.method.name(), r.coverage),
        })
        .collect();
    Ok(format!(
        "ci-benchmark: scenario {}, n={n}, alpha={}, {datasets}x{new_points} points: {} -> {}",
        spec.id(),
        cfg.alpha,
        parts.join(", "),
        out.display()
    ))
}

fn run_real(a: RealDataArgs) -> CliResult<String> {
    let s = Settings::load("real-data", a.config.as_deref())?;
    let path: PathBuf = s.required(a.data, "data")?;
    let features: Vec<String> = s.list(a.features, "features", "MedInc,AveOccup,Population")?;
    let target = s.or(a.target, "target", "MedHouseVal".to_string())?;
    let feature_refs: Vec<&str> = features.iter().map(String::as_str).collect();
    let mut table = load_csv(&path, &feature_refs, &target)?;
    if s.or(a.log_target, "log_target", true)? {
        table = table.log_transform_target()?;
    }
    let (table, _) = minmax_scale(&table)?;
    let data = table.to_dataset()?;

    let train_size = s.or(a.train_size, "train_size", data.len() * 3 / 4)?;
    let splits = s.or(a.splits, "splits", 5)?;
    let alphas: Vec<f64> = s.list(a.alphas, "alphas", "0.05,0.1")?;
    let methods: Vec<VarianceKind> = s.list(a.methods, "methods", "res,dir")?;
    let strategy: Strategy = s.or(a.strategy, "strategy", "full".to_string())?.parse()?;
    let (arch, train) = s.train(a.train, data.dim())?;
    let fit = VarianceFitConfig {
        mean_arch: arch,
        mean_train: train,
        var_arch: arch,
        var_train: train,
        mean_clip: None,
        var_clip: None,
    };
    let ci = if s.or(a.ci, "ci", false)? {
        let cfg = CiConfig {
            b: s.or(a.b, "b", 40)?,
            b_tilde: s.or(a.b_tilde, "b_tilde", 20)?,
            mean_arch: arch,
            var_arch: arch,
            mean_train: train,
            var_train: train,
            replicate_train: train.with_epochs(s.or(a.replicate_epochs, "replicate_epochs", 40)?),
            ..CiConfig::experiment_default(data.dim())?
        };
        cfg.validate()?;
        Some(cfg)
    } else {
        None
    };
    let seed = s.or(a.seed, "seed", 0)?;
    let out = s.or(a.out, "out", PathBuf::from("real_data.csv"))?;

    let report = run_real_data_study(&data, train_size, splits, &alphas, &RealDataConfig { fit, methods, strategy, ci }, seed)?;
    write_real_data_csv(&report, create(&out)?)?;
    let mut parts: Vec<String> = report
        .summary()
        .iter()
        .map(|p| format!("{} {}% PI {:.4}", Estimator::Network(p.method).name(), 100.0 * (1.0 - p.alpha), p.mean))
        .collect();
    parts.extend(
        report
            .mean_ci_lengths()
            .iter()
            .map(|(a, l)| format!("CI length at alpha={a} {l:.4}")),
    );
    Ok(format!(
        "real-data: {splits} splits, train {} / test {}: {} -> {}",
        report.train_size,
        report.test_size,
        parts.join(", "),
        out.display()
    ))
}

fn run_scenario_csv(a: ScenarioCsvArgs) -> CliResult<String> {
    let s = Settings::load("make-scenario-csv", a.config.as_deref())?;
    let spec = ScenarioSpec::new(s.required(a.scenario, "scenario")?)?;
    let n = s.or(a.n, "n", 1000)?;
    let seed = s.or(a.seed, "seed", 0)?;
    let out = s.or(a.out, "out", PathBuf::from(format!("scenario_{}.csv", spec.id())))?;
    let sample = spec.sample_dataset(n, seed)?;
    write_scenario_csv(&sample, create(&out)?)?;
    Ok(format!(
        "make-scenario-csv: scenario {}, n={n}, seed={seed} -> {}",
        spec.id(),
        out.display()
    ))
}
