//! Command-line front end.
//!
//! Every subcommand writes its reports under `--out-dir` and prints a single
//! summary line. Exit codes: 0 success, 1 usage error, 2 data error,
//! 3 non-convergence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    self, consensus_interactions, filter_stable, main_effects, top_by_strength, GapConfig, Regime,
    DEFAULT_MIN_SUPPORT, DEFAULT_TOP_K, DEFAULT_ZERO_TOL,
};
use crate::basis::ShapleyModel;
use crate::bench::protocols::{self, predict_rows, summary_csv};
use crate::bench::synth::{
    NOISE_DEFAULT_FEATURES, NOISE_DEFAULT_SAMPLES, PAIRWISE_DEFAULT_FEATURES,
    PAIRWISE_DEFAULT_PAIRS, PAIRWISE_DEFAULT_SAMPLES,
};
use crate::bench::{
    gen_pure_pairwise, gen_random_noise, k_sweep_benchmark, load_csv, metrics_from_scores,
    nested_cv, resource_profile, CsvOptions, CvConfig, Dataset, MissingPolicy, SelectionMetric,
    SweepOptions,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::trainer::{self, ClassWeighting, FitConfig, Penalty};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Default regularization-curve grid for the label-flip experiment.
pub const DEFAULT_FLIP_C_VALUES: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 1.5, 3.0];
pub const DEFAULT_FLIP_REPEATS: usize = 20;
pub const DEFAULT_GAP_FEATURES: usize = 8;
pub const DEFAULT_GAP_SAMPLES: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "shapreg", version, about = "k-additive Shapley regression")]
struct Cli {
    /// Root seed; every random draw is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Directory receiving all reports.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model and write it with a fit report.
    Fit(FitArgs),
    /// Score a CSV with a saved model.
    Predict(PredictArgs),
    /// Nested cross-validation, optionally swept over k and penalties.
    Bench(BenchArgs),
    /// Label-flip stability curve, generalization-gap experiment, bound curves.
    Bounds(BoundsArgs),
    /// Main effects and consensus interaction matrices across saved models.
    Interactions(InteractionArgs),
    /// Write a synthetic dataset with its provenance.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Generator {
    RandomNoise,
    PurePairwise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassWeightArg {
    Off,
    Balanced,
}

impl From<ClassWeightArg> for ClassWeighting {
    fn from(c: ClassWeightArg) -> Self {
        match c {
            ClassWeightArg::Off => ClassWeighting::Off,
            ClassWeightArg::Balanced => ClassWeighting::InverseFrequency,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Headered CSV file; all non-label columns must be numeric.
    #[arg(long, conflicts_with = "generator")]
    dataset: Option<PathBuf>,

    /// Label column name (default: last column).
    #[arg(long)]
    label_column: Option<String>,

    /// Label value treated as the positive class (default: labels are 0/1).
    #[arg(long)]
    positive_class: Option<String>,

    /// Drop rows with missing cells instead of rejecting the file.
    #[arg(long)]
    drop_missing: bool,

    /// Synthetic data source instead of a file.
    #[arg(long, value_enum)]
    generator: Option<Generator>,

    /// Generator feature count.
    #[arg(long)]
    features: Option<usize>,

    /// Generator sample count.
    #[arg(long)]
    samples: Option<usize>,

    /// Planted pairs for the pure-pairwise generator.
    #[arg(long)]
    pairs: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Additivity order.
    #[arg(long, default_value_t = 1)]
    k: usize,

    #[arg(long, default_value = "l2", value_parser = parse_penalty)]
    penalty: Penalty,

    #[arg(long, value_parser = parse_positive_or_zero, conflicts_with = "c")]
    lambda: Option<f64>,

    /// Inverse regularization strength, C = 1/lambda.
    #[arg(long, value_parser = parse_positive)]
    c: Option<f64>,

    #[arg(long, value_enum, default_value = "off")]
    class_weight: ClassWeightArg,

    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

impl ModelArgs {
    fn lambda(&self, default: f64) -> f64 {
        match (self.lambda, self.c) {
            (Some(l), _) => l,
            (None, Some(c)) => 1.0 / c,
            (None, None) => default,
        }
    }

    fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            penalty: self.penalty,
            lambda: self.lambda(1.0),
            max_iters: self.max_iters,
            tol: self.tol,
            class_weighting: self.class_weight.into(),
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Keep the per-iteration objective trace in the fit report.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Saved model JSON.
    #[arg(long)]
    model: PathBuf,
    /// CSV holding the model's feature columns (extra label column allowed).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    label_column: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,

    /// Explicit lambda grid, comma separated (default: 13 log-spaced C in [1e-3, 1e3]).
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    lambda_grid: Option<Vec<f64>>,

    #[arg(long, default_value = "accuracy", value_parser = parse_metric)]
    selection_metric: SelectionMetric,

    /// Majority rows kept per minority row in each training split.
    #[arg(long, value_parser = parse_positive)]
    undersample_ratio: Option<f64>,

    #[arg(long, default_value_t = 5)]
    outer_folds: usize,

    #[arg(long, default_value_t = 3)]
    inner_folds: usize,

    /// Sweep k and penalties with robustness and bootstrap protocols.
    #[arg(long)]
    sweep_k: bool,

    /// k values for the sweep (default: 1..=min(n, 3)).
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,

    /// Penalties for the sweep (default: --penalty).
    #[arg(long, value_delimiter = ',', value_parser = parse_penalty)]
    penalties: Option<Vec<Penalty>>,

    #[arg(long, value_delimiter = ',', default_values_t = protocols::DEFAULT_SIGMAS.to_vec())]
    sigmas: Vec<f64>,

    #[arg(long, default_value_t = protocols::DEFAULT_NOISE_REPEATS)]
    noise_repeats: usize,

    #[arg(long, default_value_t = protocols::DEFAULT_BOOTSTRAP_RESAMPLES)]
    bootstrap_resamples: usize,

    /// Skip robustness and bootstrap in the sweep.
    #[arg(long)]
    accuracy_only: bool,

    /// Save each outer-fold model under `models/`.
    #[arg(long)]
    save_models: bool,

    /// Also time per-fold training and inference into `resources.csv`.
    #[arg(long)]
    resources: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Stability,
    Gap,
    Curves,
    All,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Data for the stability curve (default: random noise, N=100, n=10).
    #[command(flatten)]
    data: DataArgs,

    #[arg(long, value_enum, default_value = "all")]
    experiment: Experiment,

    /// Additivity order of the stability curve.
    #[arg(long, default_value_t = 1)]
    k: usize,

    #[arg(long, value_delimiter = ',', value_parser = parse_positive,
          default_values_t = DEFAULT_FLIP_C_VALUES.to_vec())]
    c_values: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_FLIP_REPEATS)]
    repeats: usize,

    #[arg(long, default_value_t = DEFAULT_GAP_FEATURES)]
    gap_features: usize,

    #[arg(long, default_value_t = DEFAULT_GAP_SAMPLES)]
    gap_samples: usize,

    /// k values of the gap experiment and bound curves (default: 1..=gap features).
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,

    #[arg(long, default_value_t = 10)]
    iterations: usize,

    /// Strength of the regularized gap regime and of the stability bound curve.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    lambda: f64,

    /// Coefficient-norm radius B for the Rademacher curve.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    radius: f64,

    /// Loss Lipschitz constant L for the stability curve.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    lipschitz: f64,

    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

#[derive(Debug, Args)]
struct InteractionArgs {
    /// Saved model JSON files (all must share features and k).
    #[arg(long, num_args = 1.., required = true)]
    models: Vec<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,

    #[arg(long, default_value_t = DEFAULT_MIN_SUPPORT)]
    min_support: f64,

    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
}

fn parse_penalty(s: &str) -> std::result::Result<Penalty, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<SelectionMetric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("expected a finite value > 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_positive_or_zero(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("expected a finite value >= 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::TooLarge { .. } | Error::BasisMismatch { .. } => {
            EXIT_USAGE
        }
        _ => EXIT_DATA,
    }
}

/// Parses `args` (program name first), runs the subcommand, returns the exit code.
pub fn run<I, T>(args: I) -> i32
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
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Bounds(a) => cmd_bounds(cli, a),
        Command::Interactions(a) => cmd_interactions(cli, a),
        Command::Synth(a) => cmd_synth(cli, a),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn generate(generator: Generator, data: &DataArgs, seed: u64) -> Result<Dataset> {
    match generator {
        Generator::RandomNoise => gen_random_noise(
            data.features.unwrap_or(NOISE_DEFAULT_FEATURES),
            data.samples.unwrap_or(NOISE_DEFAULT_SAMPLES),
            seed,
        ),
        Generator::PurePairwise => gen_pure_pairwise(
            data.features.unwrap_or(PAIRWISE_DEFAULT_FEATURES),
            data.samples.unwrap_or(PAIRWISE_DEFAULT_SAMPLES),
            data.pairs.unwrap_or(PAIRWISE_DEFAULT_PAIRS),
            seed,
        )
        .map(|(d, _)| d),
    }
}

/// Loads `--dataset` or runs `--generator`; `fallback` applies when neither is given.
fn load_data(data: &DataArgs, seed: u64, fallback: Option<Generator>) -> Result<Dataset> {
    if let Some(path) = &data.dataset {
        let options = CsvOptions {
            label_column: data.label_column.clone(),
            positive_class: data.positive_class.clone(),
            missing: if data.drop_missing {
                MissingPolicy::DropRows
            } else {
                MissingPolicy::Reject
            },
            ..CsvOptions::default()
        };
        return load_csv(path, &options);
    }
    match data.generator.or(fallback) {
        Some(g) => generate(g, data, seed),
        None => Err(Error::invalid(
            "one data source is required: --dataset or --generator",
        )),
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "--k must lie in 1..={n} for {n} features, got {k}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport<'a> {
    dataset: &'a str,
    n_samples: usize,
    n_features: usize,
    k: usize,
    config: &'a FitConfig,
    converged: bool,
    iterations: usize,
    objective: f64,
    grad_norm: f64,
    training: crate::bench::MetricSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_trace: Option<&'a [f64]>,
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> Result<i32> {
    let data = load_data(&a.data, cli.seed, None)?;
    check_k(a.model.k, data.n_features())?;
    let config = a.model.fit_config(cli.seed);
    let result = trainer::fit(&data, a.model.k, &config)?;
    let proba = result.model.predict_proba(&data.x)?;
    let training = metrics_from_scores(&data.y, &proba)?;

    let model_path = cli.out_dir.join("model.json");
    result.model.save(&model_path)?;
    let report = FitReport {
        dataset: &data.name,
        n_samples: data.n_samples(),
        n_features: data.n_features(),
        k: a.model.k,
        config: &config,
        converged: result.converged,
        iterations: result.iterations,
        objective: result.objective,
        grad_norm: result.grad_norm,
        training: training.clone(),
        objective_trace: a.trace.then_some(result.objective_trace.as_slice()),
    };
    write(&cli.out_dir.join("fit_report.json"), json(&report)?)?;
    println!(
        "fit: k={} penalty={} lambda={} converged={} iterations={} train_accuracy={:.4} model={}",
        a.model.k,
        config.penalty,
        config.effective_lambda(),
        result.converged,
        result.iterations,
        training.accuracy,
        model_path.display()
    );
    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

/// Feature matrix for `model` from a headered CSV, plus labels when present.
fn read_for_model(
    model: &ShapleyModel,
    path: &Path,
    label_column: Option<&str>,
) -> Result<(Matrix, Option<Vec<u8>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::data(format!("{}: {other:?}", path.display())),
    })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let n = model.n();
    let names = model.feature_names();
    let by_name: Option<Vec<usize>> = names
        .iter()
        .map(|f| header.iter().position(|h| h == f))
        .collect();
    let label_idx =
        match label_column {
            Some(l) => Some(header.iter().position(|h| h == l).ok_or_else(|| {
                Error::data(format!("{}: no label column '{l}'", path.display()))
            })?),
            None if by_name.is_none() && header.len() == n + 1 => Some(n),
            None => None,
        };
    let columns = match by_name {
        Some(cols) => cols,
        None => {
            let cols: Vec<usize> = (0..header.len())
                .filter(|&c| Some(c) != label_idx)
                .collect();
            if cols.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: cols.len(),
                });
            }
            cols
        }
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for &c in &columns {
            let cell = record.get(c).unwrap_or("");
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::data(format!(
                    "{} line {}: column '{}' holds non-numeric value '{cell}'",
                    path.display(),
                    line + 2,
                    header[c]
                ))
            })?;
            values.push(v);
        }
        if let Some(l) = label_idx {
            let cell = record.get(l).unwrap_or("").trim();
            labels.push(match cell {
                "0" => 0,
                "1" => 1,
                _ => {
                    return Err(Error::data(format!(
                        "{} line {}: label '{cell}' is not 0 or 1",
                        path.display(),
                        line + 2
                    )))
                }
            });
        }
    }
    let rows = values.len() / n;
    Ok((
        Matrix::from_vec(rows, n, values)?,
        label_idx.map(|_| labels),
    ))
}

fn cmd_predict(cli: &Cli, a: &PredictArgs) -> Result<i32> {
    let model = ShapleyModel::load(&a.model)?;
    let (x, labels) = read_for_model(&model, &a.dataset, a.label_column.as_deref())?;
    let rows = predict_rows(&model, &x)?;
    let out = cli.out_dir.join("predictions.csv");
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["row", "probability", "label"])?;
    for (i, (p, label)) in rows.iter().enumerate() {
        w.write_record([i.to_string(), p.to_string(), label.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&out, e))?;
    let accuracy = labels.map(|y| {
        let hits = y.iter().zip(&rows).filter(|(t, (_, l))| *t == l).count();
        hits as f64 / y.len().max(1) as f64
    });
    match accuracy {
        Some(acc) => println!(
            "predict: {} rows accuracy={acc:.4} predictions={}",
            rows.len(),
            out.display()
        ),
        None => println!("predict: {} rows predictions={}", rows.len(), out.display()),
    }
    Ok(EXIT_OK)
}

fn cv_config(a: &BenchArgs, k: usize, seed: u64) -> CvConfig {
    let mut cfg = CvConfig::new(k, a.model.penalty);
    if let Some(grid) = &a.lambda_grid {
        cfg.c_grid = grid.iter().map(|l| 1.0 / l).collect();
    } else if a.model.lambda.is_some() || a.model.c.is_some() {
        cfg.c_grid = vec![1.0 / a.model.lambda(1.0)];
    }
    cfg.outer_folds = a.outer_folds;
    cfg.inner_folds = a.inner_folds;
    cfg.selection_metric = a.selection_metric;
    cfg.class_weighting = a.model.class_weight.into();
    cfg.undersample_ratio = a.undersample_ratio;
    cfg.tol = a.model.tol;
    cfg.max_iters = a.model.max_iters;
    cfg.seed = seed;
    cfg
}

fn save_fold_models(dir: &Path, prefix: &str, models: &[&ShapleyModel]) -> Result<()> {
    let dir = dir.join("models");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (f, m) in models.iter().enumerate() {
        m.save(&dir.join(format!("{prefix}fold{f}.json")))?;
    }
    Ok(())
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<i32> {
    let data = load_data(&a.data, cli.seed, None)?;
    let n = data.n_features();

    if !a.sweep_k {
        check_k(a.model.k, n)?;
        let cfg = cv_config(a, a.model.k, cli.seed);
        let report = nested_cv(&data, &cfg)?;
        write(&cli.out_dir.join("cv_report.json"), json(&report)?)?;
        if a.save_models {
            save_fold_models(&cli.out_dir, "", &report.models())?;
        }
        if a.resources {
            write_resources(cli, &data, &[(a.model.k, cfg.penalty)], a)?;
        }
        let acc = report.accuracy();
        let stalled = report.folds.iter().filter(|f| !f.converged).count();
        println!(
            "bench: {} k={} penalty={} accuracy={:.4} ± {:.4} unconverged_folds={stalled} report={}",
            data.name,
            a.model.k,
            cfg.penalty,
            acc.mean,
            acc.std,
            cli.out_dir.join("cv_report.json").display()
        );
        return Ok(EXIT_OK);
    }

    let k_values = a
        .k_values
        .clone()
        .unwrap_or_else(|| (1..=n.min(3)).collect());
    for &k in &k_values {
        check_k(k, n)?;
    }
    let penalties = a.penalties.clone().unwrap_or_else(|| vec![a.model.penalty]);
    let options = SweepOptions {
        k_values: k_values.clone(),
        penalties: penalties.clone(),
        sigmas: a.sigmas.clone(),
        noise_repeats: a.noise_repeats,
        bootstrap_resamples: a.bootstrap_resamples,
        accuracy_only: a.accuracy_only,
    };
    let base = cv_config(a, k_values[0], cli.seed);
    let report = k_sweep_benchmark(&data, &base, &options)?;
    write(&cli.out_dir.join("sweep_report.json"), json(&report)?)?;
    write(&cli.out_dir.join("summary.csv"), summary_csv(&report)?)?;
    if a.save_models {
        for e in &report.entries {
            save_fold_models(
                &cli.out_dir,
                &format!("{}_k{}_", e.penalty, e.k),
                &e.cv.models(),
            )?;
        }
    }
    if a.resources {
        let combos: Vec<(usize, Penalty)> = penalties
            .iter()
            .flat_map(|&p| k_values.iter().map(move |&k| (k, p)))
            .collect();
        write_resources(cli, &data, &combos, a)?;
    }
    let best: Vec<String> = report
        .summary
        .iter()
        .map(|r| {
            format!(
                "{}:k={} acc={:.4}",
                r.penalty, r.best_k_accuracy, r.accuracy.mean
            )
        })
        .collect();
    println!(
        "bench: {} sweep k={:?} best [{}] summary={}",
        data.name,
        k_values,
        best.join(", "),
        cli.out_dir.join("summary.csv").display()
    );
    Ok(EXIT_OK)
}

/// Wall-clock measurements go to their own file so the reports stay reproducible.
fn write_resources(
    cli: &Cli,
    data: &Dataset,
    combos: &[(usize, Penalty)],
    a: &BenchArgs,
) -> Result<()> {
    let rows = combos
        .iter()
        .map(|&(k, penalty)| {
            let cfg = FitConfig {
                penalty,
                ..a.model.fit_config(cli.seed)
            };
            resource_profile(data, k, &cfg, a.outer_folds, cli.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(&cli.out_dir.join("resources.csv"), &rows)
}

#[derive(Serialize)]
struct GapWideRow {
    k: usize,
    dimension: u64,
    d_eff: f64,
    gap_unregularized: f64,
    gap_unregularized_std: f64,
    gap_l2: f64,
    gap_l2_std: f64,
}

#[derive(Serialize)]
struct BoundsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    stability: Option<Vec<analysis::StabilityRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<analysis::GapReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curves: Option<Vec<analysis::BoundRow>>,
}

fn cmd_bounds(cli: &Cli, a: &BoundsArgs) -> Result<i32> {
    let wants = |e: Experiment| a.experiment == e || a.experiment == Experiment::All;
    let k_values = a
        .k_values
        .clone()
        .unwrap_or_else(|| (1..=a.gap_features).collect());
    let mut report = BoundsReport {
        stability: None,
        gap: None,
        curves: None,
    };
    let mut summary = Vec::new();

    if wants(Experiment::Stability) {
        let data = load_data(&a.data, cli.seed, Some(Generator::RandomNoise))?;
        check_k(a.k, data.n_features())?;
        let base = FitConfig {
            tol: a.tol,
            max_iters: a.max_iters,
            seed: cli.seed,
            ..FitConfig::default()
        };
        let rows = analysis::stability_curve(&data, a.k, &a.c_values, a.repeats, &base)?;
        write_rows(&cli.out_dir.join("stability.csv"), &rows)?;
        summary.push(format!("stability={} C values", rows.len()));
        report.stability = Some(rows);
    }
    if wants(Experiment::Gap) {
        let mut cfg = GapConfig::new(a.gap_features, a.gap_samples, cli.seed);
        cfg.k_values = k_values.clone();
        cfg.iterations = a.iterations;
        cfg.tol = a.tol;
        cfg.max_iters = a.max_iters;
        cfg.regimes = vec![
            Regime {
                penalty: Penalty::None,
                lambda: 0.0,
            },
            Regime {
                penalty: Penalty::L2,
                lambda: a.lambda,
            },
        ];
        let gap = analysis::gap_experiment(&cfg)?;
        let wide: Vec<GapWideRow> = k_values
            .iter()
            .filter_map(|&k| {
                let u = gap.row(k, Penalty::None)?;
                let r = gap.row(k, Penalty::L2)?;
                Some(GapWideRow {
                    k,
                    dimension: u.dimension,
                    d_eff: u.d_eff,
                    gap_unregularized: u.mean_gap,
                    gap_unregularized_std: u.std_gap,
                    gap_l2: r.mean_gap,
                    gap_l2_std: r.std_gap,
                })
            })
            .collect();
        write_rows(&cli.out_dir.join("gap.csv"), &wide)?;
        summary.push(format!("gap={} k values", wide.len()));
        report.gap = Some(gap);
    }
    if wants(Experiment::Curves) {
        let rows = analysis::bound_curves(
            a.gap_features,
            a.gap_samples,
            &k_values,
            a.lambda,
            a.radius,
            a.lipschitz,
        )?;
        write_rows(&cli.out_dir.join("bound_curves.csv"), &rows)?;
        summary.push(format!("curves={} k values", rows.len()));
        report.curves = Some(rows);
    }
    write(&cli.out_dir.join("bounds_report.json"), json(&report)?)?;
    println!(
        "bounds: {} dir={}",
        summary.join(" "),
        cli.out_dir.display()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RankedPair<'a> {
    feature_a: &'a str,
    feature_b: &'a str,
    mean: f64,
    support: f64,
}

fn cmd_interactions(cli: &Cli, a: &InteractionArgs) -> Result<i32> {
    let models = a
        .models
        .iter()
        .map(|p| ShapleyModel::load(p))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ShapleyModel> = models.iter().collect();
    let n = models[0].n();
    if a.top_k == 0 || a.top_k > n {
        return Err(Error::invalid(format!(
            "--top-k must lie in 1..={n} for {n} features, got {}",
            a.top_k
        )));
    }
    if !(0.0..=1.0).contains(&a.min_support) {
        return Err(Error::invalid("--min-support must lie in [0, 1]"));
    }
    let effects = main_effects(&refs)?;
    write_rows(&cli.out_dir.join("main_effects.csv"), &effects)?;

    let consensus = consensus_interactions(&refs, a.zero_tol)?;
    let stable = top_by_strength(&filter_stable(&consensus, a.min_support)?, a.top_k)?;
    write(&cli.out_dir.join("interaction_mean.csv"), stable.mean_csv())?;
    write(
        &cli.out_dir.join("interaction_support.csv"),
        stable.support_csv(),
    )?;
    let ranked: Vec<RankedPair> = consensus
        .ranked_pairs()
        .into_iter()
        .map(|(i, j, v)| RankedPair {
            feature_a: &consensus.names[i],
            feature_b: &consensus.names[j],
            mean: v,
            support: consensus.support[i][j],
        })
        .collect();
    write_rows(&cli.out_dir.join("interactions_ranked.csv"), &ranked)?;
    println!(
        "interactions: {} models, {} main effects, {} features kept, top pair {} dir={}",
        models.len(),
        effects.len(),
        stable.len(),
        ranked
            .first()
            .map(|r| format!("{}x{}={:.4}", r.feature_a, r.feature_b, r.mean))
            .unwrap_or_else(|| "none".into()),
        cli.out_dir.display()
    );
    Ok(EXIT_OK)
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> Result<i32> {
    let (data, provenance) = match a.generator {
        Generator::RandomNoise => {
            let n = a.features.unwrap_or(NOISE_DEFAULT_FEATURES);
            let samples = a.samples.unwrap_or(NOISE_DEFAULT_SAMPLES);
            let d = gen_random_noise(n, samples, cli.seed)?;
            let prov = serde_json::json!({
                "generator": "random-noise", "n": n, "samples": samples, "seed": cli.seed,
            });
            (d, prov)
        }
        Generator::PurePairwise => {
            let (d, prov) = gen_pure_pairwise(
                a.features.unwrap_or(PAIRWISE_DEFAULT_FEATURES),
                a.samples.unwrap_or(PAIRWISE_DEFAULT_SAMPLES),
                a.pairs.unwrap_or(PAIRWISE_DEFAULT_PAIRS),
                cli.seed,
            )?;
            (d, serde_json::to_value(prov)?)
        }
    };
    let csv_path = cli.out_dir.join(format!("{}.csv", data.name));
    data.write_csv(&csv_path, "label")?;
    write(
        &cli.out_dir.join(format!("{}.provenance.json", data.name)),
        json(&provenance)?,
    )?;
    let (neg, pos) = data.class_counts();
    println!(
        "synth: {} {}x{} labels {neg}/{pos} data={}",
        data.name,
        data.n_samples(),
        data.n_features(),
        csv_path.display()
    );
    Ok(EXIT_OK)
}
