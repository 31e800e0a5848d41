//! Regularized logistic regression over the Shapley basis.
//!
//! The objective is
//!
//! ```text
//! J(beta, I) = sum_i w_i * CE(y_i, sigmoid(beta + <I, Phi_i>)) + lambda * P(I)
//! ```
//!
//! with `P = ||I||_1` (L1) or `P = ||I||_2^2` (L2). The bias is never
//! penalized. Smooth objectives are minimized with limited-memory
//! quasi-Newton directions and an Armijo backtracking line search; the L1
//! objective with a monotone accelerated proximal-gradient method.
//! Both start from zero and only ever accept steps that do not increase `J`.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{self, DesignMatrix, Normalization, ShapleyModel};
use crate::bench::Dataset;
use crate::error::{Error, Result};
use crate::game::{Basis, SetFunction};
use crate::matrix::{dot, norm2};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    None,
    L1,
    L2,
}

impl std::str::FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Penalty::None),
            "l1" => Ok(Penalty::L1),
            "l2" => Ok(Penalty::L2),
            other => Err(Error::invalid(format!(
                "unknown penalty '{other}' (expected none, l1 or l2)"
            ))),
        }
    }
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Penalty::None => "none",
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Off,
    /// Each sample of class `c` is weighted by `N / (2 N_c)`.
    InverseFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub penalty: Penalty,
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub class_weighting: ClassWeighting,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            penalty: Penalty::L2,
            lambda: 1.0,
            max_iters: 10_000,
            tol: 1e-8,
            class_weighting: ClassWeighting::Off,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn new(penalty: Penalty, lambda: f64) -> Self {
        FitConfig {
            penalty,
            lambda,
            ..FitConfig::default()
        }
    }

    /// Regularization given as `C = 1 / lambda`.
    pub fn with_c(penalty: Penalty, c: f64) -> Self {
        FitConfig::new(penalty, 1.0 / c)
    }

    /// Strength actually applied; zero when the penalty is `None`.
    pub fn effective_lambda(&self) -> f64 {
        match self.penalty {
            Penalty::None => 0.0,
            _ => self.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "regularization strength must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "tolerance must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ShapleyModel,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub objective_trace: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// First-order optimality measure at the returned point (see [`fit_design`]).
    pub grad_norm: f64,
}

impl FitResult {
    /// JSON report; the objective trace is kept only when `verbose`.
    pub fn to_json(&self, verbose: bool) -> Result<String> {
        if verbose {
            Ok(serde_json::to_string_pretty(self)?)
        } else {
            let mut trimmed = self.clone();
            trimmed.objective_trace.clear();
            Ok(serde_json::to_string_pretty(&trimmed)?)
        }
    }
}

/// Bias and coefficient vector in optimizer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub bias: f64,
    pub indices: Vec<f64>,
}

impl Params {
    pub fn zeros(p: usize) -> Self {
        Params {
            bias: 0.0,
            indices: vec![0.0; p],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.bias)
            .chain(self.indices.iter().copied())
            .collect()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Params {
            bias: v[0],
            indices: v[1..].to_vec(),
        }
    }
}

/// Per-sample weights for the chosen class weighting.
pub fn sample_weights(y: &[u8], weighting: ClassWeighting) -> Vec<f64> {
    match weighting {
        ClassWeighting::Off => vec![1.0; y.len()],
        ClassWeighting::InverseFrequency => {
            let n = y.len() as f64;
            let pos = y.iter().filter(|&&v| v == 1).count() as f64;
            let neg = n - pos;
            y.iter()
                .map(|&v| {
                    let count = if v == 1 { pos } else { neg };
                    n / (2.0 * count)
                })
                .collect()
        }
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Cross-entropy of one sample given its logit.
#[inline]
pub fn cross_entropy(y: u8, z: f64) -> f64 {
    if y == 1 {
        softplus(-z)
    } else {
        softplus(z)
    }
}

fn penalty_value(penalty: Penalty, lambda: f64, w: &[f64]) -> f64 {
    match penalty {
        Penalty::None => 0.0,
        Penalty::L1 => lambda * w.iter().map(|v| v.abs()).sum::<f64>(),
        Penalty::L2 => lambda * w.iter().map(|v| v * v).sum::<f64>(),
    }
}

fn check_labels(y: &[u8], design: &DesignMatrix) -> Result<()> {
    if y.len() != design.rows() {
        return Err(Error::invalid(format!(
            "{} labels for a design matrix with {} rows",
            y.len(),
            design.rows()
        )));
    }
    if let Some((i, v)) = y.iter().enumerate().find(|(_, &v)| v > 1) {
        return Err(Error::data(format!("label {v} at row {i} is not binary")));
    }
    if let Some(pos) = design.values.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::data(format!(
            "non-finite design entry at row {}, column {}",
            pos / design.cols().max(1),
            pos % design.cols().max(1)
        )));
    }
    Ok(())
}

/// Smooth part of the objective and its gradient in `[bias, indices...]` layout.
struct Objective<'a> {
    design: &'a DesignMatrix,
    y: &'a [u8],
    weights: Vec<f64>,
    penalty: Penalty,
    lambda: f64,
    total_weight: f64,
}

impl<'a> Objective<'a> {
    fn new(design: &'a DesignMatrix, y: &'a [u8], config: &FitConfig) -> Self {
        let weights = sample_weights(y, config.class_weighting);
        let total_weight = weights.iter().sum();
        Objective {
            design,
            y,
            weights,
            penalty: config.penalty,
            lambda: config.effective_lambda(),
            total_weight,
        }
    }

    /// Weighted cross-entropy plus the smooth (L2) penalty, with gradient.
    fn smooth(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (bias, w) = (theta[0], &theta[1..]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for i in 0..self.design.rows() {
            let row = self.design.row(i);
            let z = bias + dot(row, w);
            let wi = self.weights[i];
            loss += wi * cross_entropy(self.y[i], z);
            let r = wi * (basis::sigmoid(z) - f64::from(self.y[i]));
            grad[0] += r;
            for (g, &phi) in grad[1..].iter_mut().zip(row) {
                *g += r * phi;
            }
        }
        if self.penalty == Penalty::L2 {
            loss += penalty_value(Penalty::L2, self.lambda, w);
            for (g, &v) in grad[1..].iter_mut().zip(w) {
                *g += 2.0 * self.lambda * v;
            }
        }
        loss
    }

    fn smooth_value(&self, theta: &[f64]) -> f64 {
        let (bias, w) = (theta[0], &theta[1..]);
        let mut loss = 0.0;
        for i in 0..self.design.rows() {
            let z = bias + dot(self.design.row(i), w);
            loss += self.weights[i] * cross_entropy(self.y[i], z);
        }
        if self.penalty == Penalty::L2 {
            loss += penalty_value(Penalty::L2, self.lambda, w);
        }
        loss
    }

    fn nonsmooth(&self, theta: &[f64]) -> f64 {
        if self.penalty == Penalty::L1 {
            penalty_value(Penalty::L1, self.lambda, &theta[1..])
        } else {
            0.0
        }
    }

    /// Optimality measures are reported per unit of sample weight.
    fn scale(&self) -> f64 {
        self.total_weight.max(1.0)
    }
}

/// Objective value and gradient at `params`.
///
/// The value includes the penalty (never on the bias). For L1 the gradient
/// covers only the smooth cross-entropy part; the penalty is handled by the
/// proximal step.
pub fn loss_and_gradient(
    params: &Params,
    design: &DesignMatrix,
    y: &[u8],
    config: &FitConfig,
) -> Result<(f64, Vec<f64>)> {
    config.validate()?;
    check_labels(y, design)?;
    if params.indices.len() != design.cols() {
        return Err(Error::DimensionMismatch {
            expected: design.cols(),
            found: params.indices.len(),
        });
    }
    let obj = Objective::new(design, y, config);
    let theta = params.to_vec();
    let mut grad = vec![0.0; theta.len()];
    let value = obj.smooth(&theta, &mut grad) + obj.nonsmooth(&theta);
    Ok((value, grad))
}

/// Raw optimizer output on a fixed design.
#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Params,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Minimizes the objective on a precomputed design matrix.
///
/// Convergence is declared when the first-order optimality measure, divided
/// by the total sample weight, is at most `config.tol`: the gradient norm for
/// the smooth penalties, the norm of the proximal-gradient mapping for L1.
pub fn fit_design(design: &DesignMatrix, y: &[u8], config: &FitConfig) -> Result<Solution> {
    config.validate()?;
    check_labels(y, design)?;
    let obj = Objective::new(design, y, config);
    match config.penalty {
        Penalty::L1 if config.lambda > 0.0 => Ok(solve_proximal(&obj, config)),
        _ => Ok(solve_smooth(&obj, config)),
    }
}

fn solve_smooth(obj: &Objective, config: &FitConfig) -> Solution {
    let dim = obj.design.cols() + 1;
    let scale = obj.scale();
    let mut x = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut f = obj.smooth(&x, &mut g);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(LBFGS_MEMORY);
    let mut iterations = 0;
    let mut converged = norm2(&g) / scale <= config.tol;

    let mut x_new = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    while !converged && iterations < config.max_iters {
        iterations += 1;
        let mut d = two_loop(&g, &history);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() {
            (1.0 / norm2(&g)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for ((xn, &xi), &di) in x_new.iter_mut().zip(&x).zip(&d) {
                *xn = xi + step * di;
            }
            let f_new = obj.smooth(&x_new, &mut g_new);
            // near the optimum the Armijo decrease drops below rounding noise of f;
            // a step that keeps f within a few ulps and shrinks the gradient is taken
            let within_rounding =
                f_new - f <= (8.0 * f64::EPSILON * f.abs()).min(1e-12) && norm2(&g_new) < norm2(&g);
            if f_new.is_finite() && (f_new <= f + ARMIJO_C * step * slope || within_rounding) {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            if history.is_empty() {
                // no decrease even along the steepest descent direction
                break;
            }
            history.clear();
            continue;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm2(&s) * norm2(&yv) {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        trace.push(f);
        converged = norm2(&g) / scale <= config.tol;
    }
    Solution {
        params: Params::from_slice(&x),
        objective: f,
        objective_trace: trace,
        converged,
        iterations,
        grad_norm: norm2(&g) / scale,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Soft-thresholding on the coefficients; the bias passes through.
fn prox_l1(v: &[f64], threshold: f64, out: &mut [f64]) {
    out[0] = v[0];
    for (o, &x) in out[1..].iter_mut().zip(&v[1..]) {
        *o = x.signum() * (x.abs() - threshold).max(0.0);
    }
}

fn solve_proximal(obj: &Objective, config: &FitConfig) -> Solution {
    let dim = obj.design.cols() + 1;
    let scale = obj.scale();
    let lambda = obj.lambda;
    let mut x = vec![0.0; dim];
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut g = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut grad_step = vec![0.0; dim];
    let mut lipschitz = 1.0f64;
    let mut t = 1.0f64;
    let mut f_x = obj.smooth_value(&x) + obj.nonsmooth(&x);
    let mut trace = vec![f_x];
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;

    while iterations < config.max_iters {
        iterations += 1;
        let f_y = obj.smooth(&y, &mut g);
        // backtracking on the quadratic upper bound of the smooth part
        let f_z = loop {
            for ((o, &yi), &gi) in grad_step.iter_mut().zip(&y).zip(&g) {
                *o = yi - gi / lipschitz;
            }
            prox_l1(&grad_step, lambda / lipschitz, &mut z);
            let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let f_z = obj.smooth_value(&z);
            let bound = f_y + dot(&g, &diff) + 0.5 * lipschitz * dot(&diff, &diff);
            if f_z <= bound + 1e-12 * f_y.abs() || lipschitz > 1e300 {
                residual = lipschitz * norm2(&diff) / scale;
                break f_z;
            }
            lipschitz *= 2.0;
        };
        let big_z = f_z + obj.nonsmooth(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        x_prev.copy_from_slice(&x);
        let improved = big_z <= f_x;
        if improved {
            x.copy_from_slice(&z);
            f_x = big_z;
        }
        // monotone FISTA extrapolation; restart momentum when z was rejected
        if improved {
            for i in 0..dim {
                y[i] = x[i] + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
            }
            t = t_next;
        } else {
            for i in 0..dim {
                y[i] = x[i] + (t / t_next) * (z[i] - x[i]);
            }
            t = 1.0;
        }
        trace.push(f_x);
        if residual <= config.tol {
            // the mapping was evaluated at y; make sure x is the point it certifies
            if !improved || z != x {
                x.copy_from_slice(&z);
                f_x = big_z.min(f_x);
            }
            converged = true;
            break;
        }
    }
    Solution {
        params: Params::from_slice(&x),
        objective: f_x,
        objective_trace: trace,
        converged,
        iterations,
        grad_norm: residual,
    }
}

/// Fits a `k`-additive model; normalization bounds are learned on `dataset`.
pub fn fit(dataset: &Dataset, k: usize, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let (neg, pos) = dataset.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::data(format!(
            "dataset '{}' contains a single class ({neg} negative, {pos} positive)",
            dataset.name
        )));
    }
    let normalization = Normalization::fit(&dataset.x)?;
    let x = normalization.apply(&dataset.x)?;
    let design = basis::design_matrix(&x, k)?;
    let sol = fit_design(&design, &dataset.y, config)?;
    let indices = SetFunction::new(dataset.n_features(), k, Basis::Shapley, sol.params.indices)?;
    let model = ShapleyModel::new(
        sol.params.bias,
        indices,
        dataset.feature_names.clone(),
        normalization,
    )?;
    Ok(FitResult {
        model,
        objective_trace: sol.objective_trace,
        objective: sol.objective,
        converged: sol.converged,
        iterations: sol.iterations,
        grad_norm: sol.grad_norm,
    })
}

/// One single-label-flip refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipTrial {
    pub flipped_row: usize,
    /// `||theta_S - theta_S'||_2` over bias and indices.
    pub shift: f64,
    /// `max_A |I_S(A) - I_S'(A)|`.
    pub max_index_shift: f64,
    /// Mean over the original training points of `|loss_S(z) - loss_S'(z)|`.
    pub loss_difference: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipSensitivity {
    pub trials: Vec<FlipTrial>,
    pub mean_shift: f64,
    pub std_shift: f64,
    pub mean_loss_difference: f64,
    /// Largest design-row norm, the Lipschitz constant of the loss in the parameters.
    pub lipschitz: f64,
}

/// Refits after flipping one uniformly chosen label per repeat and records
/// how far the parameters and per-sample losses move.
pub fn sensitivity_to_label_flip(
    dataset: &Dataset,
    k: usize,
    config: &FitConfig,
    repeats: usize,
) -> Result<FlipSensitivity> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if dataset.n_samples() == 0 {
        return Err(Error::data("empty dataset"));
    }
    let normalization = Normalization::fit(&dataset.x)?;
    let x = normalization.apply(&dataset.x)?;
    let design = basis::design_matrix(&x, k)?;
    let base = fit_design(&design, &dataset.y, config)?;
    let theta = base.params.to_vec();
    let base_losses = per_sample_losses(&design, &dataset.y, &base.params);

    let trials: Vec<FlipTrial> = (0..repeats)
        .into_par_iter()
        .map(|r| -> Result<FlipTrial> {
            let mut rng = seed::rng(seed::derive(
                config.seed,
                &[seed::stream::LABEL_FLIP, r as u64],
            ));
            let row = rng.gen_range(0..dataset.n_samples());
            let mut y = dataset.y.clone();
            y[row] = 1 - y[row];
            let sol = fit_design(&design, &y, config)?;
            let theta_flip = sol.params.to_vec();
            let diff: Vec<f64> = theta.iter().zip(&theta_flip).map(|(a, b)| a - b).collect();
            let shift = norm2(&diff);
            let max_index_shift = diff[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let flipped_losses = per_sample_losses(&design, &dataset.y, &sol.params);
            let loss_difference = base_losses
                .iter()
                .zip(&flipped_losses)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / base_losses.len() as f64;
            Ok(FlipTrial {
                flipped_row: row,
                shift,
                max_index_shift,
                loss_difference,
                converged: sol.converged,
            })
        })
        .collect::<Result<_>>()?;

    let shifts: Vec<f64> = trials.iter().map(|t| t.shift).collect();
    let (mean_shift, std_shift) = crate::stats::mean_std(&shifts);
    let mean_loss_difference =
        trials.iter().map(|t| t.loss_difference).sum::<f64>() / trials.len() as f64;
    Ok(FlipSensitivity {
        trials,
        mean_shift,
        std_shift,
        mean_loss_difference,
        lipschitz: design.max_row_norm(),
    })
}

fn per_sample_losses(design: &DesignMatrix, y: &[u8], params: &Params) -> Vec<f64> {
    (0..design.rows())
        .map(|i| cross_entropy(y[i], params.bias + dot(design.row(i), &params.indices)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_problem(n: usize, k: usize, rows: usize, seed: u64) -> (DesignMatrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * n).map(|_| rng.gen()).collect();
        let x = Matrix::from_vec(rows, n, data).unwrap();
        let y: Vec<u8> = (0..rows).map(|_| rng.gen_range(0..2)).collect();
        (basis::design_matrix(&x, k).unwrap(), y)
    }

    #[test]
    fn zero_start_on_balanced_labels() {
        let (d, _) = random_problem(3, 2, 10, 1);
        let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let (loss, grad) =
            loss_and_gradient(&Params::zeros(6), &d, &y, &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(loss, 10.0 * std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (seed, penalty) in [(3, Penalty::None), (4, Penalty::L2), (5, Penalty::L1)] {
            let (d, y) = random_problem(4, 2, 30, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let params = Params {
                bias: rng.gen_range(-1.0..1.0),
                indices: (0..d.cols()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let cfg = FitConfig::new(penalty, 0.7);
            let smooth_cfg = if penalty == Penalty::L1 {
                FitConfig::new(Penalty::None, 0.0)
            } else {
                cfg.clone()
            };
            let (_, grad) = loss_and_gradient(&params, &d, &y, &cfg).unwrap();
            let theta = params.to_vec();
            let h = 1e-6;
            for j in 0..theta.len() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[j] += h;
                dn[j] -= h;
                let fu = loss_and_gradient(&Params::from_slice(&up), &d, &y, &smooth_cfg)
                    .unwrap()
                    .0;
                let fd = loss_and_gradient(&Params::from_slice(&dn), &d, &y, &smooth_cfg)
                    .unwrap()
                    .0;
                let fdiff = (fu - fd) / (2.0 * h);
                let rel = (fdiff - grad[j]).abs() / fdiff.abs().max(grad[j].abs()).max(1e-8);
                assert!(
                    rel < 1e-5,
                    "{penalty} coordinate {j}: {fdiff} vs {}",
                    grad[j]
                );
            }
        }
    }

    #[test]
    fn l2_penalty_adds_lambda_times_squared_norm() {
        let (d, y) = random_problem(3, 2, 12, 9);
        let params = Params {
            bias: 0.3,
            indices: vec![0.5, -1.0, 0.25, 0.0, 2.0, -0.5],
        };
        let plain = loss_and_gradient(&params, &d, &y, &FitConfig::new(Penalty::L2, 0.0))
            .unwrap()
            .0;
        let pen = loss_and_gradient(&params, &d, &y, &FitConfig::new(Penalty::L2, 1.5))
            .unwrap()
            .0;
        let sq: f64 = params.indices.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(pen - plain, 1.5 * sq, epsilon = 1e-12);
        let l1 = loss_and_gradient(&params, &d, &y, &FitConfig::new(Penalty::L1, 2.0))
            .unwrap()
            .0;
        assert_abs_diff_eq!(l1 - plain, 2.0 * 4.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_labels_and_configs() {
        let (d, mut y) = random_problem(2, 1, 5, 2);
        y[3] = 2;
        assert!(matches!(
            loss_and_gradient(&Params::zeros(2), &d, &y, &FitConfig::default()),
            Err(Error::Data(_))
        ));
        let mut cfg = FitConfig {
            lambda: -1.0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.lambda = 1.0;
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn inverse_frequency_weights() {
        let w = sample_weights(&[1, 0, 0, 0], ClassWeighting::InverseFrequency);
        assert_eq!(w, vec![2.0, 4.0 / 6.0, 4.0 / 6.0, 4.0 / 6.0]);
        let total: f64 = w.iter().sum();
        assert_abs_diff_eq!(total, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn smooth_solver_trace_is_monotone_and_converges() {
        let (d, y) = random_problem(4, 2, 60, 11);
        let sol = fit_design(&d, &y, &FitConfig::new(Penalty::L2, 1.0)).unwrap();
        assert!(sol.converged, "grad {}", sol.grad_norm);
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn proximal_solver_trace_is_monotone_and_sparse() {
        let (d, y) = random_problem(5, 2, 80, 12);
        let sol = fit_design(&d, &y, &FitConfig::new(Penalty::L1, 3.0)).unwrap();
        assert!(sol.converged, "residual {}", sol.grad_norm);
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(sol.params.indices.contains(&0.0));
    }

    #[test]
    fn l1_solution_satisfies_subgradient_conditions() {
        let (d, y) = random_problem(4, 2, 60, 13);
        let lambda = 2.0;
        let cfg = FitConfig {
            tol: 1e-10,
            ..FitConfig::new(Penalty::L1, lambda)
        };
        let sol = fit_design(&d, &y, &cfg).unwrap();
        assert!(sol.converged);
        let (_, g) = loss_and_gradient(&sol.params, &d, &y, &cfg).unwrap();
        assert!(g[0].abs() < 1e-6);
        for (gi, wi) in g[1..].iter().zip(&sol.params.indices) {
            if *wi == 0.0 {
                assert!(gi.abs() <= lambda + 1e-6);
            } else {
                assert_abs_diff_eq!(*gi, -lambda * wi.signum(), epsilon = 1e-6);
            }
        }
    }
}
