//! Benchmark protocols built on nested CV: noise robustness, bootstrap
//! stability, resource profiling and the additivity sweep.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{nested_cv, split, stratified_folds, CvConfig, CvReport, Summary};
use super::metrics::metrics_from_scores;
use super::Dataset;
use crate::basis::{classify, sigmoid, ShapleyModel};
use crate::coalition::combinatorial_dimension;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::stats::mean_std;
use crate::trainer::{self, FitConfig, Penalty};

pub const DEFAULT_SIGMAS: [f64; 3] = [0.1, 0.2, 0.3];
pub const DEFAULT_NOISE_REPEATS: usize = 10;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub sigma: f64,
    pub repeats: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

fn accuracy(y: &[u8], proba: &[f64]) -> f64 {
    let hits = y
        .iter()
        .zip(proba)
        .filter(|(&t, &p)| classify(p) == t)
        .count();
    hits as f64 / y.len() as f64
}

/// Test accuracy after adding `N(0, sigma^2)` noise to normalized inputs
/// (then clipping to `[0, 1]`), per sigma, averaged over repeats.
pub fn noise_robustness(
    model: &ShapleyModel,
    test: &Dataset,
    sigmas: &[f64],
    repeats: usize,
    seed_root: u64,
) -> Result<Vec<NoiseResult>> {
    if repeats == 0 {
        return Err(Error::invalid("noise repeats must be at least 1"));
    }
    if test.n_samples() == 0 {
        return Err(Error::data("empty test split"));
    }
    let clean = model.normalization().apply(&test.x)?;
    sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| {
            if !(sigma >= 0.0) {
                return Err(Error::invalid(format!(
                    "noise level must be >= 0, got {sigma}"
                )));
            }
            let accs: Vec<f64> = (0..repeats)
                .into_par_iter()
                .map(|r| -> Result<f64> {
                    let mut x = clean.clone();
                    if sigma > 0.0 {
                        let mut rng = seed::rng(seed::derive(
                            seed_root,
                            &[seed::stream::NOISE, si as u64, r as u64],
                        ));
                        let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
                        for v in x.as_mut_slice() {
                            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
                        }
                    }
                    let proba: Vec<f64> = model
                        .logits_normalized(&x)?
                        .into_iter()
                        .map(sigmoid)
                        .collect();
                    Ok(accuracy(&test.y, &proba))
                })
                .collect::<Result<_>>()?;
            let (mean, std) = mean_std(&accs);
            Ok(NoiseResult {
                sigma,
                repeats,
                mean_accuracy: mean,
                std_accuracy: std,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub requested: usize,
    pub effective: usize,
    pub skipped: usize,
    /// Out-of-bag accuracy per usable resample, in resample order.
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub evaluation: String,
}

/// Standard deviation of out-of-bag accuracy over bootstrap refits.
///
/// Resamples missing a class in-bag, or with an empty out-of-bag set, are
/// skipped and counted.
pub fn bootstrap_stability(
    dataset: &Dataset,
    k: usize,
    config: &FitConfig,
    resamples: usize,
    seed_root: u64,
) -> Result<BootstrapReport> {
    if resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    let n = dataset.n_samples();
    let outcomes: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| -> Result<Option<f64>> {
            let mut rng = seed::rng(seed::derive(
                seed_root,
                &[seed::stream::BOOTSTRAP, b as u64],
            ));
            let mut in_bag = vec![false; n];
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let r = rng.gen_range(0..n);
                    in_bag[r] = true;
                    r
                })
                .collect();
            let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
            let train = dataset.subset(&rows);
            let (neg, pos) = train.class_counts();
            if oob.is_empty() || neg == 0 || pos == 0 {
                log::warn!("bootstrap resample {b} is degenerate and was skipped");
                return Ok(None);
            }
            let fit = trainer::fit(&train, k, config)?;
            let test = dataset.subset(&oob);
            let proba = fit.model.predict_proba(&test.x)?;
            Ok(Some(accuracy(&test.y, &proba)))
        })
        .collect::<Result<_>>()?;
    let accuracies: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let (mean, std) = if accuracies.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        mean_std(&accuracies)
    };
    Ok(BootstrapReport {
        requested: resamples,
        effective: accuracies.len(),
        skipped: resamples - accuracies.len(),
        mean_accuracy: mean,
        std_accuracy: std,
        accuracies,
        evaluation: "out-of-bag".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub dataset: String,
    pub k: usize,
    pub penalty: Penalty,
    pub folds: usize,
    pub dimension: u64,
    pub mean_test_fold_size: f64,
    pub train_time_s: f64,
    pub infer_time_s: f64,
    pub model_size_mb: f64,
    pub flops: f64,
}

/// `2 * D_k * mean_test_fold_size`: one multiply and one add per parameter and test row.
pub fn flops_estimate(dimension: u64, mean_test_fold_size: f64) -> f64 {
    2.0 * dimension as f64 * mean_test_fold_size
}

/// Bias plus `D_k` coefficients at 8 bytes each, in MiB.
pub fn model_size_mb(dimension: u64) -> f64 {
    (dimension as f64 + 1.0) * 8.0 / (1u64 << 20) as f64
}

/// Wall-clock training and inference time averaged over stratified folds.
///
/// Folds run one after another so timings are not distorted by contention.
pub fn resource_profile(
    dataset: &Dataset,
    k: usize,
    config: &FitConfig,
    folds: usize,
    seed_root: u64,
) -> Result<ResourceProfile> {
    let dimension = combinatorial_dimension(dataset.n_features(), k)?;
    let assignment = stratified_folds(
        &dataset.y,
        folds,
        seed::derive(seed_root, &[seed::stream::OUTER_FOLDS]),
    )?;
    let mut train_time = 0.0;
    let mut infer_time = 0.0;
    let mut test_rows_total = 0usize;
    for f in 0..folds {
        let (tr, te) = split(&assignment, f);
        let train = dataset.subset(&tr);
        let test = dataset.subset(&te);
        let start = Instant::now();
        let fit = trainer::fit(&train, k, config)?;
        train_time += start.elapsed().as_secs_f64();
        let start = Instant::now();
        let proba = fit.model.predict_proba(&test.x)?;
        infer_time += start.elapsed().as_secs_f64();
        std::hint::black_box(&proba);
        test_rows_total += te.len();
    }
    let mean_test = test_rows_total as f64 / folds as f64;
    Ok(ResourceProfile {
        dataset: dataset.name.clone(),
        k,
        penalty: config.penalty,
        folds,
        dimension,
        mean_test_fold_size: mean_test,
        train_time_s: train_time / folds as f64,
        infer_time_s: infer_time / folds as f64,
        model_size_mb: model_size_mb(dimension),
        flops: flops_estimate(dimension, mean_test),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub penalty: Penalty,
    pub accuracy: Summary,
    /// Noisy-input accuracy pooled over sigmas; mean and std across outer folds.
    pub robustness: Summary,
    pub noise: Vec<NoiseResult>,
    pub bootstrap: BootstrapReport,
    /// `lambda` used for the bootstrap refits (the median of the per-fold choices).
    pub bootstrap_lambda: f64,
    pub cv: CvReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub penalty: Penalty,
    pub best_k_accuracy: usize,
    pub accuracy: Summary,
    pub best_k_robust: usize,
    pub robustness: Summary,
    pub best_k_stability: usize,
    pub bootstrap_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub dataset: String,
    pub sigmas: Vec<f64>,
    pub noise_repeats: usize,
    pub bootstrap_resamples: usize,
    pub entries: Vec<SweepEntry>,
    pub summary: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub k_values: Vec<usize>,
    pub penalties: Vec<Penalty>,
    pub sigmas: Vec<f64>,
    pub noise_repeats: usize,
    pub bootstrap_resamples: usize,
    /// Skip the robustness and bootstrap stages.
    pub accuracy_only: bool,
}

impl SweepOptions {
    pub fn new(k_values: Vec<usize>, penalties: Vec<Penalty>) -> Self {
        SweepOptions {
            k_values,
            penalties,
            sigmas: DEFAULT_SIGMAS.to_vec(),
            noise_repeats: DEFAULT_NOISE_REPEATS,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            accuracy_only: false,
        }
    }
}

/// Best entry by `score` (higher is better); ties keep the smaller `k`.
fn best_by(entries: &[&SweepEntry], score: impl Fn(&SweepEntry) -> f64) -> usize {
    let mut best = 0;
    for (i, e) in entries.iter().enumerate().skip(1) {
        if score(e) > score(entries[best]) {
            best = i;
        }
    }
    best
}

/// Nested CV, robustness and bootstrap stability for every `(k, penalty)`.
pub fn k_sweep_benchmark(
    dataset: &Dataset,
    base: &CvConfig,
    options: &SweepOptions,
) -> Result<SweepReport> {
    if options.k_values.is_empty() || options.penalties.is_empty() {
        return Err(Error::invalid(
            "the sweep needs at least one k and one penalty",
        ));
    }
    let mut entries = Vec::new();
    for &penalty in &options.penalties {
        for &k in &options.k_values {
            let cfg = CvConfig {
                k,
                penalty,
                ..base.clone()
            };
            let cv = nested_cv(dataset, &cfg)?;
            let (robustness, noise, bootstrap, bootstrap_lambda) = if options.accuracy_only {
                (
                    Summary {
                        mean: f64::NAN,
                        std: f64::NAN,
                    },
                    Vec::new(),
                    BootstrapReport {
                        requested: 0,
                        effective: 0,
                        skipped: 0,
                        accuracies: Vec::new(),
                        mean_accuracy: f64::NAN,
                        std_accuracy: f64::NAN,
                        evaluation: "skipped".into(),
                    },
                    f64::NAN,
                )
            } else {
                robustness_and_stability(dataset, &cfg, &cv, options)?
            };
            entries.push(SweepEntry {
                k,
                penalty,
                accuracy: cv.accuracy(),
                robustness,
                noise,
                bootstrap,
                bootstrap_lambda,
                cv,
            });
        }
    }

    let summary = options
        .penalties
        .iter()
        .map(|&penalty| {
            let group: Vec<&SweepEntry> = entries.iter().filter(|e| e.penalty == penalty).collect();
            let acc = best_by(&group, |e| e.accuracy.mean);
            let rob = best_by(&group, |e| e.robustness.mean);
            let stab = best_by(&group, |e| -e.bootstrap.std_accuracy);
            SummaryRow {
                dataset: dataset.name.clone(),
                penalty,
                best_k_accuracy: group[acc].k,
                accuracy: group[acc].accuracy,
                best_k_robust: group[rob].k,
                robustness: group[rob].robustness,
                best_k_stability: group[stab].k,
                bootstrap_std: group[stab].bootstrap.std_accuracy,
            }
        })
        .collect();

    Ok(SweepReport {
        dataset: dataset.name.clone(),
        sigmas: options.sigmas.clone(),
        noise_repeats: options.noise_repeats,
        bootstrap_resamples: options.bootstrap_resamples,
        entries,
        summary,
    })
}

fn robustness_and_stability(
    dataset: &Dataset,
    cfg: &CvConfig,
    cv: &CvReport,
    options: &SweepOptions,
) -> Result<(Summary, Vec<NoiseResult>, BootstrapReport, f64)> {
    let per_fold: Vec<Vec<NoiseResult>> = cv
        .folds
        .iter()
        .map(|f| {
            let model = f.model.as_ref().expect("nested_cv keeps fold models");
            let test = dataset.subset(&f.test_rows);
            let task_seed = seed::derive(cfg.seed, &[seed::stream::NOISE, f.fold as u64]);
            noise_robustness(
                model,
                &test,
                &options.sigmas,
                options.noise_repeats,
                task_seed,
            )
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<f64> = per_fold
        .iter()
        .map(|rs| rs.iter().map(|r| r.mean_accuracy).sum::<f64>() / rs.len().max(1) as f64)
        .collect();
    let noise: Vec<NoiseResult> = options
        .sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| {
            let accs: Vec<f64> = per_fold.iter().map(|rs| rs[si].mean_accuracy).collect();
            let (mean, std) = mean_std(&accs);
            NoiseResult {
                sigma,
                repeats: options.noise_repeats,
                mean_accuracy: mean,
                std_accuracy: std,
            }
        })
        .collect();

    let lambdas: Vec<f64> = cv.folds.iter().map(|f| f.selected_lambda).collect();
    let lambda = crate::stats::median(&lambdas);
    let fit_config = FitConfig {
        lambda,
        ..cfg.fit_config(f64::INFINITY)
    };
    let bootstrap = bootstrap_stability(
        dataset,
        cfg.k,
        &fit_config,
        options.bootstrap_resamples,
        seed::derive(cfg.seed, &[seed::stream::BOOTSTRAP]),
    )?;
    Ok((Summary::of(&pooled), noise, bootstrap, lambda))
}

/// Appendix-table-shaped CSV of the sweep summary.
pub fn summary_csv(report: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "Dataset",
        "Penalty",
        "Best K (Acc)",
        "Accuracy ± Std",
        "Best K (Robust)",
        "Robustness Accuracy ± Std",
        "Best K (Stab)",
        "Bootstrap Stability (Std)",
    ])?;
    for r in &report.summary {
        w.write_record([
            r.dataset.clone(),
            r.penalty.to_string(),
            r.best_k_accuracy.to_string(),
            format!("{:.4} ± {:.4}", r.accuracy.mean, r.accuracy.std),
            r.best_k_robust.to_string(),
            format!("{:.4} ± {:.4}", r.robustness.mean, r.robustness.std),
            r.best_k_stability.to_string(),
            format!("{:.4}", r.bootstrap_std),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per-row probabilities under a fixed model, used by the prediction path.
pub fn predict_rows(model: &ShapleyModel, x: &Matrix) -> Result<Vec<(f64, u8)>> {
    Ok(model
        .predict_proba(x)?
        .into_iter()
        .map(|p| (p, classify(p)))
        .collect())
}

/// Single-split accuracy helper for quick checks.
pub fn holdout_accuracy(model: &ShapleyModel, test: &Dataset) -> Result<f64> {
    let proba = model.predict_proba(&test.x)?;
    Ok(metrics_from_scores(&test.y, &proba)?.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::gen_random_noise;
    use crate::trainer::fit;

    fn separable(n: usize) -> Dataset {
        let x = Matrix::from_vec(
            n,
            2,
            (0..2 * n)
                .map(|i| ((i * 37) % 101) as f64 / 100.0)
                .collect(),
        )
        .unwrap();
        let y = x.iter_rows().map(|r| u8::from(r[0] > 0.5)).collect();
        Dataset::new("sep", x, y, vec!["a".into(), "b".into()], "").unwrap()
    }

    #[test]
    fn zero_noise_reproduces_clean_accuracy() {
        let d = separable(80);
        let f = fit(&d, 1, &FitConfig::new(Penalty::L2, 0.01)).unwrap();
        let clean = holdout_accuracy(&f.model, &d).unwrap();
        let r = noise_robustness(&f.model, &d, &[0.0, 0.3], 3, 1).unwrap();
        assert_eq!(r[0].mean_accuracy, clean);
        assert_eq!(r[0].std_accuracy, 0.0);
        assert!(r[1].mean_accuracy <= clean + 0.02);
        assert_eq!(
            r,
            noise_robustness(&f.model, &d, &[0.0, 0.3], 3, 1).unwrap()
        );
    }

    #[test]
    fn bootstrap_is_deterministic_and_counts_resamples() {
        let d = gen_random_noise(3, 60, 2).unwrap();
        let cfg = FitConfig::new(Penalty::L2, 1.0);
        let a = bootstrap_stability(&d, 1, &cfg, 8, 3).unwrap();
        assert_eq!(a, bootstrap_stability(&d, 1, &cfg, 8, 3).unwrap());
        assert_eq!(a.effective + a.skipped, 8);
        assert_eq!(a.accuracies.len(), a.effective);
    }

    #[test]
    fn identical_predictions_give_zero_bootstrap_spread() {
        // two well separated clusters: every refit classifies every out-of-bag row correctly
        let x = Matrix::from_vec(
            40,
            1,
            (0..40).map(|i| if i < 20 { 0.0 } else { 1.0 }).collect(),
        )
        .unwrap();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let d = Dataset::new("c", x, y, vec!["f".into()], "").unwrap();
        let r = bootstrap_stability(&d, 1, &FitConfig::new(Penalty::L2, 0.1), 5, 0).unwrap();
        assert_eq!(r.effective, 5);
        assert_eq!(r.std_accuracy, 0.0);
    }

    #[test]
    fn flops_and_size_conventions() {
        assert!((flops_estimate(8, 153.6) - 2457.6).abs() < 1e-9);
        assert!((flops_estimate(36, 153.6) - 11059.2).abs() < 1e-9);
        assert!(model_size_mb(36) > model_size_mb(8));
    }

    #[test]
    fn sweep_emits_one_summary_row_per_penalty() {
        let d = gen_random_noise(3, 60, 5).unwrap();
        let mut base = CvConfig::new(1, Penalty::L2);
        base.c_grid = vec![1.0];
        let mut opts = SweepOptions::new(vec![1, 2], vec![Penalty::None, Penalty::L2]);
        opts.noise_repeats = 2;
        opts.bootstrap_resamples = 3;
        let r = k_sweep_benchmark(&d, &base, &opts).unwrap();
        assert_eq!(r.entries.len(), 4);
        assert_eq!(r.summary.len(), 2);
        let csv = summary_csv(&r).unwrap();
        assert!(csv.starts_with("Dataset,Penalty,Best K (Acc)"));
        assert_eq!(csv.lines().count(), 3);
    }
}
