//! Stratified folds and nested cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics_from_scores, MetricSet, SelectionMetric};
use super::{undersample, Dataset};
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::mean_std;
use crate::trainer::{self, ClassWeighting, FitConfig, Penalty};

/// Thirteen log-spaced values of `C = 1/lambda` from 1e-3 to 1e3.
pub fn default_c_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

/// Fold id per row: each class is shuffled separately, then dealt round-robin.
///
/// The negative class is dealt first, and positives continue where it
/// stopped, so fold sizes differ by at most one overall as well as per class.
pub fn stratified_folds(y: &[u8], folds: usize, seed_value: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let mut assignment = vec![0usize; y.len()];
    let mut rng = seed::rng(seed_value);
    let mut next = 0usize;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < folds {
            return Err(Error::data(format!(
                "cannot stratify into {folds} folds: class {class} has only {} samples",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        for r in rows {
            assignment[r] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// `(train, test)` row lists for fold `f`.
pub fn split(assignment: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub penalty: Penalty,
    /// Candidate `C = 1/lambda` values; ignored when the penalty is `None`.
    pub c_grid: Vec<f64>,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub selection_metric: SelectionMetric,
    pub class_weighting: ClassWeighting,
    /// Applied to each training split only.
    pub undersample_ratio: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl CvConfig {
    pub fn new(k: usize, penalty: Penalty) -> Self {
        CvConfig {
            k,
            penalty,
            c_grid: default_c_grid(),
            outer_folds: 5,
            inner_folds: 3,
            selection_metric: SelectionMetric::Accuracy,
            class_weighting: ClassWeighting::Off,
            undersample_ratio: None,
            tol: 1e-8,
            max_iters: 10_000,
            seed: 0,
        }
    }

    /// Grid actually searched: a single unpenalized point for `Penalty::None`.
    pub fn effective_grid(&self) -> Vec<f64> {
        match self.penalty {
            Penalty::None => vec![f64::INFINITY],
            _ => self.c_grid.clone(),
        }
    }

    pub fn fit_config(&self, c: f64) -> FitConfig {
        FitConfig {
            penalty: self.penalty,
            lambda: if c.is_infinite() { 0.0 } else { 1.0 / c },
            max_iters: self.max_iters,
            tol: self.tol,
            class_weighting: self.class_weighting,
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.penalty != Penalty::None {
            if self.c_grid.is_empty() {
                return Err(Error::invalid("the regularization grid is empty"));
            }
            if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
                return Err(Error::invalid(format!(
                    "grid value C = {c} must be finite and > 0"
                )));
            }
        }
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(Error::invalid(
                "outer and inner fold counts must be at least 2",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// `null` in JSON when unpenalized.
    pub selected_c: Option<f64>,
    pub selected_lambda: f64,
    /// Inner-CV mean of the selection metric per grid point.
    pub inner_scores: Vec<f64>,
    pub metrics: MetricSet,
    pub converged: bool,
    pub iterations: usize,
    pub bias: f64,
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub model: Option<crate::basis::ShapleyModel>,
    #[serde(skip)]
    pub test_rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub dataset: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub config: CvConfig,
    pub folds: Vec<FoldReport>,
    /// Mean and sample std across outer folds, keyed by metric name.
    pub aggregate: BTreeMap<String, Summary>,
}

impl CvReport {
    pub fn accuracy(&self) -> Summary {
        self.aggregate["accuracy"]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fitted per-fold models, in fold order.
    pub fn models(&self) -> Vec<&crate::basis::ShapleyModel> {
        self.folds.iter().filter_map(|f| f.model.as_ref()).collect()
    }
}

fn aggregate(folds: &[FoldReport]) -> BTreeMap<String, Summary> {
    let mut out = BTreeMap::new();
    let mut put = |name: &str, get: &dyn Fn(&MetricSet) -> Option<f64>| {
        let vals: Vec<f64> = folds.iter().filter_map(|f| get(&f.metrics)).collect();
        if !vals.is_empty() {
            out.insert(name.to_string(), Summary::of(&vals));
        }
    };
    put("accuracy", &|m| Some(m.accuracy));
    put("balanced_accuracy", &|m| Some(m.balanced_accuracy));
    put("sensitivity", &|m| Some(m.sensitivity));
    put("specificity", &|m| Some(m.specificity));
    put("precision", &|m| Some(m.precision));
    put("f1", &|m| Some(m.f1));
    put("roc_auc", &|m| m.roc_auc);
    put("pr_auc", &|m| m.pr_auc);
    out
}

/// Fits on `train` (with optional undersampling) and scores `test`.
pub(crate) fn fit_and_score(
    train: &Dataset,
    test: &Dataset,
    config: &CvConfig,
    fit_config: &FitConfig,
    task_seed: u64,
) -> Result<(trainer::FitResult, MetricSet)> {
    let train = match config.undersample_ratio {
        Some(r) => undersample(train, r, task_seed)?,
        None => train.clone(),
    };
    let fit = trainer::fit(&train, config.k, fit_config)?;
    let proba = fit.model.predict_proba(&test.x)?;
    let m = metrics_from_scores(&test.y, &proba)?;
    Ok((fit, m))
}

/// Index of the best grid point; ties go to the smaller lambda (larger C).
fn select(grid: &[f64], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        let better =
            scores[i] > scores[best] || (scores[i] == scores[best] && grid[i] > grid[best]);
        if better {
            best = i;
        }
    }
    best
}

/// Nested stratified cross-validation.
///
/// Hyperparameters are chosen on inner folds of each outer-training split;
/// normalization, undersampling and selection never see the outer test rows.
pub fn nested_cv(dataset: &Dataset, config: &CvConfig) -> Result<CvReport> {
    config.validate()?;
    if config.k == 0 || config.k > dataset.n_features() {
        return Err(Error::invalid(format!(
            "k = {} must lie in 1..={} for this dataset",
            config.k,
            dataset.n_features()
        )));
    }
    let grid = config.effective_grid();
    let outer = stratified_folds(
        &dataset.y,
        config.outer_folds,
        seed::derive(config.seed, &[seed::stream::OUTER_FOLDS]),
    )?;

    let folds: Vec<FoldReport> = (0..config.outer_folds)
        .into_par_iter()
        .map(|f| -> Result<FoldReport> {
            let (train_rows, test_rows) = split(&outer, f);
            let train = dataset.subset(&train_rows);
            let test = dataset.subset(&test_rows);

            let inner_scores = if grid.len() == 1 {
                vec![f64::NAN]
            } else {
                let inner = stratified_folds(
                    &train.y,
                    config.inner_folds,
                    seed::derive(config.seed, &[seed::stream::INNER_FOLDS, f as u64]),
                )?;
                let tasks: Vec<(usize, usize)> = (0..grid.len())
                    .flat_map(|g| (0..config.inner_folds).map(move |i| (g, i)))
                    .collect();
                let scores: Vec<f64> = tasks
                    .par_iter()
                    .map(|&(g, i)| -> Result<f64> {
                        let (tr, va) = split(&inner, i);
                        let task_seed = seed::derive(
                            config.seed,
                            &[seed::stream::INNER_FOLDS, f as u64, i as u64],
                        );
                        let (_, m) = fit_and_score(
                            &train.subset(&tr),
                            &train.subset(&va),
                            config,
                            &config.fit_config(grid[g]),
                            task_seed,
                        )?;
                        Ok(config.selection_metric.score(&m))
                    })
                    .collect::<Result<_>>()?;
                scores
                    .chunks(config.inner_folds)
                    .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                    .collect()
            };
            let best = if grid.len() == 1 {
                0
            } else {
                select(&grid, &inner_scores)
            };
            let fit_config = config.fit_config(grid[best]);
            let task_seed = seed::derive(config.seed, &[seed::stream::OUTER_FOLDS, f as u64]);
            let (fit, m) = fit_and_score(&train, &test, config, &fit_config, task_seed)?;
            if !fit.converged {
                log::warn!(
                    "outer fold {f}: solver stopped after {} iterations (optimality {:.3e})",
                    fit.iterations,
                    fit.grad_norm
                );
            }
            Ok(FoldReport {
                fold: f,
                train_size: train.n_samples(),
                test_size: test.n_samples(),
                selected_c: grid[best].is_finite().then_some(grid[best]),
                selected_lambda: fit_config.lambda,
                inner_scores: if grid.len() == 1 {
                    Vec::new()
                } else {
                    inner_scores
                },
                metrics: m,
                converged: fit.converged,
                iterations: fit.iterations,
                bias: fit.model.bias(),
                coefficients: fit.model.indices().values().to_vec(),
                model: Some(fit.model),
                test_rows,
            })
        })
        .collect::<Result<_>>()?;

    Ok(CvReport {
        dataset: dataset.name.clone(),
        n_samples: dataset.n_samples(),
        n_features: dataset.n_features(),
        feature_names: dataset.feature_names.clone(),
        aggregate: aggregate(&folds),
        config: config.clone(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::gen_random_noise;

    #[test]
    fn grid_is_symmetric_log_spaced() {
        let g = default_c_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert!((g[6] - 1.0).abs() < 1e-12);
        assert!((g[12] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let y: Vec<u8> = (0..103).map(|i| u8::from(i % 3 == 0)).collect();
        let a = stratified_folds(&y, 5, 9).unwrap();
        let total_pos = y.iter().filter(|&&v| v == 1).count() as f64;
        for f in 0..5 {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| a[i] == f).collect();
            let pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
            let expected = total_pos * rows.len() as f64 / y.len() as f64;
            assert!(
                (pos - expected).abs() <= 1.0,
                "fold {f}: {pos} vs {expected}"
            );
        }
        assert_eq!(a, stratified_folds(&y, 5, 9).unwrap());
        assert!(stratified_folds(&[1, 0, 0, 0], 2, 0).is_err());
    }

    #[test]
    fn selection_prefers_smaller_lambda_on_ties() {
        assert_eq!(select(&[0.1, 1.0, 10.0], &[0.5, 0.7, 0.7]), 2);
        assert_eq!(select(&[0.1, 1.0, 10.0], &[0.9, 0.7, 0.7]), 0);
    }

    #[test]
    fn nested_cv_is_deterministic() {
        let d = gen_random_noise(3, 60, 4).unwrap();
        let mut cfg = CvConfig::new(2, Penalty::L2);
        cfg.c_grid = vec![0.1, 1.0];
        cfg.seed = 11;
        let a = nested_cv(&d, &cfg).unwrap();
        let b = nested_cv(&d, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.folds.len(), 5);
        let mean: f64 = a.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / 5.0;
        assert!((a.accuracy().mean - mean).abs() < 1e-15);
    }
}
