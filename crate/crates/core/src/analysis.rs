//! Interaction analysis across fitted models, capacity measures of the
//! hypothesis class, and the stability / generalization-gap experiments.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{self, classify, DesignMatrix, Normalization, ShapleyModel};
use crate::bench::{gen_random_noise, Dataset};
pub use crate::coalition::combinatorial_dimension;
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::matrix::dot;
use crate::seed;
use crate::stats::mean_std;
use crate::trainer::{self, FitConfig, Penalty};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffect {
    pub feature: usize,
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

fn check_compatible(models: &[&ShapleyModel]) -> Result<()> {
    let first = models
        .first()
        .ok_or_else(|| Error::invalid("no models given"))?;
    for (i, m) in models.iter().enumerate().skip(1) {
        if m.n() != first.n() || m.k() != first.k() || m.feature_names() != first.feature_names() {
            return Err(Error::invalid(format!(
                "model {i} (n = {}, k = {}) differs from model 0 (n = {}, k = {}) or in feature names",
                m.n(),
                m.k(),
                first.n(),
                first.k()
            )));
        }
    }
    Ok(())
}

/// Singleton indices averaged across models, ranked by mean (descending).
pub fn main_effects(models: &[&ShapleyModel]) -> Result<Vec<MainEffect>> {
    check_compatible(models)?;
    let n = models[0].n();
    let mut out: Vec<MainEffect> = (0..n)
        .map(|i| {
            let vals: Vec<f64> = models
                .iter()
                .map(|m| m.indices().get(Coalition::singleton(i)))
                .collect();
            let (mean, std) = mean_std(&vals);
            MainEffect {
                feature: i,
                name: models[0].feature_names()[i].clone(),
                mean,
                std,
            }
        })
        .collect();
    out.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.feature.cmp(&b.feature)));
    Ok(out)
}

/// Symmetric pairwise summary over a set of models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub names: Vec<String>,
    pub mean: Vec<Vec<f64>>,
    /// Fraction of models with a non-negligible pair index.
    pub support: Vec<Vec<f64>>,
    pub models: usize,
}

impl InteractionMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Per-feature strength `sum_j |mean[i][j]|`.
    pub fn strengths(&self) -> Vec<f64> {
        self.mean
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum())
            .collect()
    }

    /// Pairs `(i, j, mean)` with `i < j`, strongest first.
    pub fn ranked_pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut pairs: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.mean[i][j]))
            .collect();
        pairs.sort_by(|a, b| {
            b.2.abs()
                .total_cmp(&a.2.abs())
                .then((a.0, a.1).cmp(&(b.0, b.1)))
        });
        pairs
    }

    fn matrix_csv(&self, m: &[Vec<f64>]) -> String {
        let mut s = String::from("feature");
        for name in &self.names {
            s.push(',');
            s.push_str(&csv_field(name));
        }
        s.push('\n');
        for (name, row) in self.names.iter().zip(m) {
            s.push_str(&csv_field(name));
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn mean_csv(&self) -> String {
        self.matrix_csv(&self.mean)
    }

    pub fn support_csv(&self) -> String {
        self.matrix_csv(&self.support)
    }

    fn restrict(&self, keep: &[usize]) -> InteractionMatrix {
        let pick = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
            keep.iter()
                .map(|&i| keep.iter().map(|&j| m[i][j]).collect())
                .collect()
        };
        InteractionMatrix {
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            mean: pick(&self.mean),
            support: pick(&self.support),
            models: self.models,
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
pub const DEFAULT_MIN_SUPPORT: f64 = 0.7;
pub const DEFAULT_TOP_K: usize = 30;

/// Averages pair indices across models and counts how often each exceeds `zero_tol`.
pub fn consensus_interactions(
    models: &[&ShapleyModel],
    zero_tol: f64,
) -> Result<InteractionMatrix> {
    check_compatible(models)?;
    if models[0].k() < 2 {
        return Err(Error::invalid(
            "interaction matrices need models with k >= 2",
        ));
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::invalid(format!(
            "zero tolerance must be >= 0, got {zero_tol}"
        )));
    }
    let n = models[0].n();
    let count = models.len() as f64;
    let mut mean = vec![vec![0.0; n]; n];
    let mut support = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let vals: Vec<f64> = models
                .iter()
                .map(|m| m.indices().get(Coalition::pair(i, j)))
                .collect();
            let mu = vals.iter().sum::<f64>() / count;
            let nonzero = vals.iter().filter(|v| v.abs() > zero_tol).count();
            let s = nonzero as f64 / count;
            mean[i][j] = mu;
            mean[j][i] = mu;
            support[i][j] = s;
            support[j][i] = s;
        }
    }
    Ok(InteractionMatrix {
        names: models[0].feature_names().to_vec(),
        mean,
        support,
        models: models.len(),
    })
}

/// Zeroes mean entries whose support is below `min_support`.
pub fn filter_stable(m: &InteractionMatrix, min_support: f64) -> Result<InteractionMatrix> {
    if !(0.0..=1.0).contains(&min_support) {
        return Err(Error::invalid(format!(
            "min support must lie in [0, 1], got {min_support}"
        )));
    }
    let mut out = m.clone();
    for (row, srow) in out.mean.iter_mut().zip(&m.support) {
        for (v, &s) in row.iter_mut().zip(srow) {
            if s < min_support {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

/// Submatrix on the `top` features of largest strength, kept in feature order.
/// Ties go to the lower feature index.
pub fn top_by_strength(m: &InteractionMatrix, top: usize) -> Result<InteractionMatrix> {
    if top < 1 || top > m.len() {
        return Err(Error::invalid(format!(
            "top count must lie in 1..={}, got {top}",
            m.len()
        )));
    }
    let strength = m.strengths();
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
    let mut keep = order[..top].to_vec();
    keep.sort_unstable();
    Ok(m.restrict(&keep))
}

/// Stable rank `(tr S)^2 / tr(S^2)` of the uncentered second moment `S = Phi^T Phi / N`.
pub fn effective_dimension(design: &DesignMatrix) -> Result<f64> {
    let (rows, p) = (design.rows(), design.cols());
    if rows < 2 {
        return Err(Error::invalid(
            "effective dimension needs at least two rows",
        ));
    }
    // tr(S^2) = ||Phi^T Phi||_F^2 / N^2 = ||Phi Phi^T||_F^2 / N^2; use the smaller Gram matrix
    let trace: f64 = design.values.as_slice().iter().map(|v| v * v).sum();
    let frob2 = if p <= rows {
        let mut gram = vec![0.0; p * p];
        for r in 0..rows {
            let row = design.row(r);
            for (a, &va) in row.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                let g = &mut gram[a * p..(a + 1) * p];
                for (gb, &vb) in g[a..].iter_mut().zip(&row[a..]) {
                    *gb += va * vb;
                }
            }
        }
        let mut s = 0.0;
        for a in 0..p {
            s += gram[a * p + a] * gram[a * p + a];
            for b in a + 1..p {
                s += 2.0 * gram[a * p + b] * gram[a * p + b];
            }
        }
        s
    } else {
        let mut s = 0.0;
        for a in 0..rows {
            let ra = design.row(a);
            s += dot(ra, ra).powi(2);
            for b in a + 1..rows {
                s += 2.0 * dot(ra, design.row(b)).powi(2);
            }
        }
        s
    };
    if trace == 0.0 {
        return Err(Error::data("effective dimension of an all-zero design"));
    }
    Ok(trace * trace / frob2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: usize,
    pub dimension: u64,
    pub vc: f64,
    pub rademacher: f64,
    pub stability: f64,
}

/// `sqrt(D_k / N)`.
pub fn vc_bound(dimension: u64, samples: usize) -> f64 {
    (dimension as f64 / samples as f64).sqrt()
}

/// `2 B sqrt(2 ln(2 D_k) / N)` for coefficient vectors of l1 norm at most `B`.
pub fn rademacher_bound(dimension: u64, samples: usize, radius: f64) -> f64 {
    2.0 * radius * (2.0 * (2.0 * dimension as f64).ln() / samples as f64).sqrt()
}

/// `2 L^2 / (lambda N)` for feature norm `L`.
pub fn stability_bound(lipschitz: f64, lambda: f64, samples: usize) -> f64 {
    2.0 * lipschitz * lipschitz / (lambda * samples as f64)
}

/// Plug-in bound curves over a range of additivity orders.
pub fn bound_curves(
    n: usize,
    samples: usize,
    k_values: &[usize],
    lambda: f64,
    radius: f64,
    lipschitz: f64,
) -> Result<Vec<BoundRow>> {
    if samples == 0 || !(lambda > 0.0) || !(radius > 0.0) || !(lipschitz > 0.0) {
        return Err(Error::invalid(
            "bound curves need N, lambda, B and L all positive",
        ));
    }
    k_values
        .iter()
        .map(|&k| {
            let dimension = combinatorial_dimension(n, k)?;
            Ok(BoundRow {
                k,
                dimension,
                vc: vc_bound(dimension, samples),
                rademacher: rademacher_bound(dimension, samples, radius),
                stability: stability_bound(lipschitz, lambda, samples),
            })
        })
        .collect()
}

/// Capacity measures of one fitted configuration next to its observed gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dimension: u64,
    pub d_eff: f64,
    pub vc_gap: f64,
    pub rademacher_gap: f64,
    pub stability_gap: f64,
    pub empirical_gap: f64,
}

/// Bound report for a model fitted on `train` and evaluated on `test`.
///
/// `B` is the model's l1 norm of indices; `L` the largest training design-row norm.
pub fn bound_report(
    model: &ShapleyModel,
    train: &Dataset,
    test: &Dataset,
    lambda: f64,
) -> Result<BoundReport> {
    let design = basis::design_matrix(&model.normalization().apply(&train.x)?, model.k())?;
    let dimension = combinatorial_dimension(model.n(), model.k())?;
    let radius: f64 = model.indices().values().iter().map(|v| v.abs()).sum();
    let train_err = zero_one_error(model, train)?;
    let test_err = zero_one_error(model, test)?;
    let samples = train.n_samples();
    Ok(BoundReport {
        dimension,
        d_eff: effective_dimension(&design)?,
        vc_gap: vc_bound(dimension, samples),
        rademacher_gap: rademacher_bound(dimension, samples, radius),
        stability_gap: if lambda > 0.0 {
            stability_bound(design.max_row_norm(), lambda, samples)
        } else {
            f64::INFINITY
        },
        empirical_gap: (test_err - train_err).max(0.0),
    })
}

fn zero_one_error(model: &ShapleyModel, d: &Dataset) -> Result<f64> {
    let proba = model.predict_proba(&d.x)?;
    let wrong = proba
        .iter()
        .zip(&d.y)
        .filter(|(&p, &t)| classify(p) != t)
        .count();
    Ok(wrong as f64 / d.n_samples() as f64)
}

/// One fitting regime of the gap experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub penalty: Penalty,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub n: usize,
    pub samples: usize,
    pub k_values: Vec<usize>,
    pub regimes: Vec<Regime>,
    pub iterations: usize,
    /// When false the model is scored on its own training data (diagnostic).
    pub split: bool,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl GapConfig {
    pub fn new(n: usize, samples: usize, seed: u64) -> Self {
        GapConfig {
            n,
            samples,
            k_values: (1..=n).collect(),
            regimes: vec![
                Regime {
                    penalty: Penalty::None,
                    lambda: 0.0,
                },
                Regime {
                    penalty: Penalty::L2,
                    lambda: 1.0,
                },
            ],
            iterations: 10,
            split: true,
            tol: 1e-8,
            max_iters: 10_000,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub k: usize,
    pub penalty: Penalty,
    pub lambda: f64,
    pub dimension: u64,
    /// Mean stable rank of the training design over iterations.
    pub d_eff: f64,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub mean_train_accuracy: f64,
    pub mean_test_accuracy: f64,
    pub converged_fits: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub config: GapConfig,
    pub rows: Vec<GapRow>,
}

impl GapReport {
    pub fn row(&self, k: usize, penalty: Penalty) -> Option<&GapRow> {
        self.rows.iter().find(|r| r.k == k && r.penalty == penalty)
    }
}

struct GapCell {
    gap: f64,
    train_acc: f64,
    test_acc: f64,
    converged: bool,
}

/// Generalization gap (test minus train 0-1 error) on pure-noise labels,
/// per additivity order and regime, over independent draws.
pub fn gap_experiment(config: &GapConfig) -> Result<GapReport> {
    if config.split && !config.samples.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "sample count must be even for equal halves, got {}",
            config.samples
        )));
    }
    if config.iterations == 0 || config.k_values.is_empty() || config.regimes.is_empty() {
        return Err(Error::invalid(
            "gap experiment needs iterations, k values and regimes",
        ));
    }
    for &k in &config.k_values {
        crate::coalition::check_order(config.n, k)?;
    }

    let splits: Vec<(Dataset, Dataset)> = (0..config.iterations)
        .map(|it| -> Result<(Dataset, Dataset)> {
            let root = seed::derive(config.seed, &[seed::stream::GAP_ITERATION, it as u64]);
            let data = gen_random_noise(config.n, config.samples, root)?;
            if !config.split {
                return Ok((data.clone(), data));
            }
            let mut rows: Vec<usize> = (0..config.samples).collect();
            rows.shuffle(&mut seed::rng(seed::derive(root, &[seed::stream::SPLIT])));
            let half = config.samples / 2;
            let (mut tr, mut te) = (rows[..half].to_vec(), rows[half..].to_vec());
            tr.sort_unstable();
            te.sort_unstable();
            Ok((data.subset(&tr), data.subset(&te)))
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..config.iterations)
        .flat_map(|it| config.k_values.iter().map(move |&k| (it, k)))
        .collect();
    // per (iteration, k): stable rank and one cell per regime
    let results: Vec<(f64, Vec<GapCell>)> = tasks
        .par_iter()
        .map(|&(it, k)| -> Result<(f64, Vec<GapCell>)> {
            let (train, test) = &splits[it];
            let norm = Normalization::fit(&train.x)?;
            let design = basis::design_matrix(&norm.apply(&train.x)?, k)?;
            let d_eff = effective_dimension(&design)?;
            let test_design = basis::design_matrix(&norm.apply(&test.x)?, k)?;
            let cells = config
                .regimes
                .par_iter()
                .map(|regime| -> Result<GapCell> {
                    let fit_config = FitConfig {
                        penalty: regime.penalty,
                        lambda: regime.lambda,
                        max_iters: config.max_iters,
                        tol: config.tol,
                        class_weighting: trainer::ClassWeighting::Off,
                        seed: config.seed,
                    };
                    let sol = trainer::fit_design(&design, &train.y, &fit_config)?;
                    let acc = |d: &DesignMatrix, y: &[u8]| {
                        let hits = (0..d.rows())
                            .filter(|&i| {
                                let z = sol.params.bias + dot(d.row(i), &sol.params.indices);
                                classify(basis::sigmoid(z)) == y[i]
                            })
                            .count();
                        hits as f64 / d.rows() as f64
                    };
                    let train_acc = acc(&design, &train.y);
                    let test_acc = acc(&test_design, &test.y);
                    Ok(GapCell {
                        gap: train_acc - test_acc,
                        train_acc,
                        test_acc,
                        converged: sol.converged,
                    })
                })
                .collect::<Result<_>>()?;
            Ok((d_eff, cells))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (ri, regime) in config.regimes.iter().enumerate() {
        for (ki, &k) in config.k_values.iter().enumerate() {
            let picked: Vec<&(f64, Vec<GapCell>)> = (0..config.iterations)
                .map(|it| &results[it * config.k_values.len() + ki])
                .collect();
            let gaps: Vec<f64> = picked.iter().map(|(_, c)| c[ri].gap).collect();
            let (mean_gap, std_gap) = mean_std(&gaps);
            let avg = |vals: Vec<f64>| vals.iter().sum::<f64>() / vals.len() as f64;
            rows.push(GapRow {
                k,
                penalty: regime.penalty,
                lambda: regime.lambda,
                dimension: combinatorial_dimension(config.n, k)?,
                d_eff: avg(picked.iter().map(|p| p.0).collect()),
                mean_gap,
                std_gap,
                mean_train_accuracy: avg(picked.iter().map(|p| p.1[ri].train_acc).collect()),
                mean_test_accuracy: avg(picked.iter().map(|p| p.1[ri].test_acc).collect()),
                converged_fits: picked.iter().filter(|p| p.1[ri].converged).count(),
                iterations: config.iterations,
            });
        }
    }
    Ok(GapReport {
        config: config.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub c: f64,
    pub lambda: f64,
    pub mean_shift: f64,
    pub std_shift: f64,
    pub median_shift: f64,
    pub mean_loss_difference: f64,
    pub lipschitz: f64,
    /// `2 L^2 / (lambda N)`.
    pub ceiling: f64,
    /// Largest per-index shift minus full-vector shift over trials (never positive).
    pub worst_index_excess: f64,
    pub converged_trials: usize,
    pub trials: usize,
}

/// Single-label-flip sensitivity across a grid of `C = 1/lambda` (L2 penalty).
pub fn stability_curve(
    dataset: &Dataset,
    k: usize,
    c_values: &[f64],
    repeats: usize,
    base: &FitConfig,
) -> Result<Vec<StabilityRow>> {
    c_values
        .iter()
        .map(|&c| {
            if !(c > 0.0) {
                return Err(Error::invalid(format!("C must be > 0, got {c}")));
            }
            let cfg = FitConfig {
                penalty: Penalty::L2,
                lambda: 1.0 / c,
                ..base.clone()
            };
            let s = trainer::sensitivity_to_label_flip(dataset, k, &cfg, repeats)?;
            let shifts: Vec<f64> = s.trials.iter().map(|t| t.shift).collect();
            Ok(StabilityRow {
                c,
                lambda: cfg.lambda,
                mean_shift: s.mean_shift,
                std_shift: s.std_shift,
                median_shift: crate::stats::median(&shifts),
                mean_loss_difference: s.mean_loss_difference,
                lipschitz: s.lipschitz,
                ceiling: stability_bound(s.lipschitz, cfg.lambda, dataset.n_samples()),
                worst_index_excess: s
                    .trials
                    .iter()
                    .map(|t| t.max_index_shift - t.shift)
                    .fold(f64::NEG_INFINITY, f64::max),
                converged_trials: s.trials.iter().filter(|t| t.converged).count(),
                trials: s.trials.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Basis, SetFunction};
    use crate::matrix::Matrix;
    use approx::assert_abs_diff_eq;

    fn model_with(n: usize, values: impl Fn(Coalition) -> f64) -> ShapleyModel {
        let indices = SetFunction::from_fn(n, 2, Basis::Shapley, values).unwrap();
        ShapleyModel::new(
            0.0,
            indices,
            (0..n).map(|i| format!("f{i}")).collect(),
            Normalization::identity(n),
        )
        .unwrap()
    }

    #[test]
    fn main_effects_rank_and_cancel() {
        let a = model_with(3, |c| if c.len() == 1 { c.mask() as f64 } else { 0.0 });
        let b = model_with(3, |c| {
            if c.len() == 1 {
                -(c.mask() as f64)
            } else {
                0.0
            }
        });
        let single = main_effects(&[&a]).unwrap();
        assert_eq!(single[0].feature, 2);
        assert!(single.iter().all(|e| e.std == 0.0));
        let both = main_effects(&[&a, &b]).unwrap();
        assert!(both.iter().all(|e| e.mean == 0.0));
    }

    #[test]
    fn consensus_by_hand() {
        let on = model_with(3, |c| if c == Coalition::pair(0, 1) { 0.4 } else { 0.0 });
        let off = model_with(3, |_| 0.0);
        let models = [&on, &off, &off, &off, &off];
        let m = consensus_interactions(&models, DEFAULT_ZERO_TOL).unwrap();
        assert_abs_diff_eq!(m.mean[0][1], 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(m.support[1][0], 0.2, epsilon = 1e-15);
        assert_eq!(m.mean[2][2], 0.0);
        let f = filter_stable(&m, 0.7).unwrap();
        assert_eq!(f.mean[0][1], 0.0);
        assert_eq!(f.support, m.support);
        assert_eq!(filter_stable(&m, 0.0).unwrap(), m);
        assert!(filter_stable(&m, 1.0 + 1e-9).is_err());
    }

    #[test]
    fn top_by_strength_star_and_ties() {
        let star = model_with(4, |c| {
            if c.len() == 2 && c.contains(0) {
                1.0
            } else {
                0.0
            }
        });
        let m = consensus_interactions(&[&star], 0.0).unwrap();
        assert_eq!(top_by_strength(&m, 1).unwrap().names, vec!["f0"]);
        assert_eq!(top_by_strength(&m, 4).unwrap(), m);
        let zero = consensus_interactions(&[&model_with(4, |_| 0.0)], 0.0).unwrap();
        assert_eq!(
            top_by_strength(&zero, 3).unwrap().names,
            vec!["f0", "f1", "f2"]
        );
        assert!(top_by_strength(&m, 5).is_err());
        assert!(top_by_strength(&m, 0).is_err());
    }

    #[test]
    fn interaction_csv_has_headers() {
        let m = consensus_interactions(&[&model_with(2, |_| 0.5)], 0.0).unwrap();
        assert_eq!(m.mean_csv(), "feature,f0,f1\nf0,0,0.5\nf1,0.5,0\n");
        assert!(consensus_interactions(&[&on_k1()], 0.0).is_err());
    }

    fn on_k1() -> ShapleyModel {
        let indices = SetFunction::zeros(2, 1, Basis::Shapley).unwrap();
        ShapleyModel::new(
            0.0,
            indices,
            vec!["a".into(), "b".into()],
            Normalization::identity(2),
        )
        .unwrap()
    }

    fn design(rows: &[&[f64]]) -> DesignMatrix {
        let values = Matrix::from_rows(rows).unwrap();
        let coalitions = (0..values.cols()).map(Coalition::singleton).collect();
        DesignMatrix { values, coalitions }
    }

    #[test]
    fn effective_dimension_extremes() {
        let eye = design(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_abs_diff_eq!(effective_dimension(&eye).unwrap(), 3.0, epsilon = 1e-12);
        let rank1 = design(&[&[1.0, 2.0], &[2.0, 4.0], &[0.5, 1.0]]);
        assert_abs_diff_eq!(effective_dimension(&rank1).unwrap(), 1.0, epsilon = 1e-12);
        // wide design takes the row-Gram path
        let wide = design(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        assert_abs_diff_eq!(effective_dimension(&wide).unwrap(), 2.0, epsilon = 1e-12);
        assert!(effective_dimension(&design(&[&[0.0], &[0.0]])).is_err());
    }

    #[test]
    fn bound_plug_ins() {
        assert_abs_diff_eq!(stability_bound(1.0, 1.0, 100), 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(vc_bound(36, 100), 0.6, epsilon = 1e-15);
        // 2 * sqrt(2 ln 72 / 100) = 0.58492...; the commonly quoted 0.5851 is a rounding
        assert_abs_diff_eq!(
            rademacher_bound(36, 100, 1.0),
            0.584_921_609_723_289_7,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(rademacher_bound(36, 100, 1.0), 0.5851, epsilon = 5e-4);
        let rows = bound_curves(8, 100, &[1, 2, 3], 1.0, 1.0, 1.0).unwrap();
        assert!(rows
            .windows(2)
            .all(|w| w[0].vc <= w[1].vc && w[0].rademacher <= w[1].rademacher));
        assert!(rows.iter().all(|r| r.stability == rows[0].stability));
    }

    #[test]
    fn diagnostic_mode_has_zero_gap() {
        let mut cfg = GapConfig::new(3, 40, 1);
        cfg.k_values = vec![1, 2];
        cfg.iterations = 2;
        cfg.split = false;
        let r = gap_experiment(&cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.mean_gap == 0.0));
        let mut odd = GapConfig::new(3, 41, 1);
        odd.k_values = vec![1];
        assert!(gap_experiment(&odd).is_err());
    }
}
