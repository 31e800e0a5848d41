//! Trainer, capacity measures and CV checked against independent references.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapreg::analysis::effective_dimension;
use shapreg::bench::{gen_pure_pairwise, gen_random_noise, nested_cv, CvConfig, Dataset};
use shapreg::trainer::{fit_design, loss_and_gradient, Params};
use shapreg::{design_matrix, fit, FitConfig, Matrix, Penalty};

fn random_design(seed: u64, rows: usize, n: usize, k: usize) -> (shapreg::DesignMatrix, Vec<u8>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let x = Matrix::from_vec(rows, n, (0..rows * n).map(|_| r.gen::<f64>()).collect()).unwrap();
    let y = (0..rows).map(|_| u8::from(r.gen_bool(0.5))).collect();
    (design_matrix(&x, k).unwrap(), y)
}

#[test]
fn matches_plain_gradient_descent() {
    // reference: fixed-step gradient descent run far past convergence
    let (design, y) = random_design(1, 40, 4, 2);
    let config = FitConfig::new(Penalty::L2, 0.5);
    let p = design.cols() + 1;
    let mut theta = vec![0.0; p];
    let row_norm = design.max_row_norm();
    let step = 1.0 / (0.25 * 40.0 * (1.0 + row_norm * row_norm) + 2.0 * 0.5);
    for _ in 0..200_000 {
        let (_, g) = loss_and_gradient(&Params::from_slice(&theta), &design, &y, &config).unwrap();
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= step * gi;
        }
    }
    let (reference, _) =
        loss_and_gradient(&Params::from_slice(&theta), &design, &y, &config).unwrap();
    let sol = fit_design(&design, &y, &config).unwrap();
    assert!(sol.converged);
    assert!(
        (sol.objective - reference).abs() <= 1e-6,
        "solver {} vs gradient descent {reference}",
        sol.objective
    );
}

#[test]
fn l1_matches_proximal_reference() {
    // reference: ISTA with a fixed step
    let (design, y) = random_design(2, 40, 4, 2);
    let lambda = 0.8;
    let config = FitConfig::new(Penalty::L1, lambda);
    let smooth = FitConfig::new(Penalty::None, 0.0);
    let row_norm = design.max_row_norm();
    let step = 1.0 / (0.25 * 40.0 * (1.0 + row_norm * row_norm));
    let mut theta = vec![0.0; design.cols() + 1];
    for _ in 0..200_000 {
        let (_, g) = loss_and_gradient(&Params::from_slice(&theta), &design, &y, &smooth).unwrap();
        for (j, t) in theta.iter_mut().enumerate() {
            let v = *t - step * g[j];
            *t = if j == 0 {
                v
            } else {
                v.signum() * (v.abs() - step * lambda).max(0.0)
            };
        }
    }
    let (reference, _) =
        loss_and_gradient(&Params::from_slice(&theta), &design, &y, &config).unwrap();
    let sol = fit_design(&design, &y, &config).unwrap();
    assert!(sol.converged);
    assert!((sol.objective - reference).abs() <= 1e-6);
}

#[test]
fn heavy_ridge_leaves_only_the_prior() {
    let d = gen_random_noise(6, 200, 5).unwrap();
    let res = fit(&d, 2, &FitConfig::new(Penalty::L2, 1e6)).unwrap();
    assert!(res.converged);
    let biggest = res
        .model
        .indices()
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(biggest < 1e-4, "largest index {biggest}");
    // with the indices pinned near zero the bias fits the class prior, up to the
    // basis offset absorbed from the tiny indices
    let (neg, pos) = d.class_counts();
    let prior_logit = (pos as f64 / neg as f64).ln();
    assert!((res.model.bias() - prior_logit).abs() < 1e-2);
}

#[test]
fn separable_data_grow_without_penalty_and_stay_bounded_with_it() {
    let x = Matrix::from_vec(20, 1, (0..20).map(|i| i as f64 / 19.0).collect()).unwrap();
    let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
    let d = Dataset::new("line", x, y, vec!["t".into()], String::new()).unwrap();
    let free = fit(
        &d,
        1,
        &FitConfig {
            max_iters: 500,
            ..FitConfig::new(Penalty::None, 0.0)
        },
    )
    .unwrap();
    let ridge = fit(&d, 1, &FitConfig::new(Penalty::L2, 1.0)).unwrap();
    let slope = |r: &shapreg::FitResult| r.model.indices().values()[0];
    // the unpenalized optimum is at infinity: the slope runs until the
    // gradient falls below tolerance
    assert!(slope(&free) > 20.0, "slope {}", slope(&free));
    assert!(ridge.converged);
    assert!(slope(&ridge) > 0.0 && slope(&ridge) < slope(&free));
    let proba = free.model.predict_proba(&d.x).unwrap();
    assert!(proba
        .iter()
        .zip(&d.y)
        .all(|(p, &y)| (*p >= 0.5) == (y == 1)));
}

#[test]
fn effective_dimension_matches_eigenvalues() {
    for (seed, rows, n, k) in [(3u64, 60, 5, 2), (4, 12, 6, 3)] {
        let (design, _) = random_design(seed, rows, n, k);
        let phi = DMatrix::from_row_slice(rows, design.cols(), design.values.as_slice());
        let second_moment = phi.transpose() * &phi / rows as f64;
        let eig = SymmetricEigen::new(second_moment).eigenvalues;
        let sum: f64 = eig.iter().sum();
        let sum_sq: f64 = eig.iter().map(|v| v * v).sum();
        let oracle = sum * sum / sum_sq;
        let ours = effective_dimension(&design).unwrap();
        assert!((ours - oracle).abs() <= 1e-9 * oracle, "{ours} vs {oracle}");
        assert!(ours <= design.cols() as f64 + 1e-9);
    }
}

#[test]
fn test_rows_never_reach_their_fold_model() {
    let (d, _) = gen_pure_pairwise(6, 120, 1, 9).unwrap();
    let mut cfg = CvConfig::new(2, Penalty::L2);
    cfg.c_grid = vec![0.1, 1.0, 10.0];
    cfg.seed = 9;
    let base = nested_cv(&d, &cfg).unwrap();
    for fold in &base.folds {
        let mut x = d.x.clone();
        for &r in &fold.test_rows {
            for j in 0..d.n_features() {
                let v = x.get(r, j);
                x.set(r, j, 1.0 - v);
            }
        }
        // labels stay put: they drive the stratified split itself
        let poisoned = Dataset::new(
            "poisoned",
            x,
            d.y.clone(),
            d.feature_names.clone(),
            String::new(),
        )
        .unwrap();
        let again = nested_cv(&poisoned, &cfg).unwrap();
        let same = &again.folds[fold.fold];
        assert_eq!(same.test_rows, fold.test_rows);
        assert_eq!(
            same.selected_lambda.to_bits(),
            fold.selected_lambda.to_bits()
        );
        assert_eq!(same.bias.to_bits(), fold.bias.to_bits());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&same.coefficients), bits(&fold.coefficients));
    }
}

#[test]
fn gradient_matches_sampled_directional_derivatives() {
    let (design, y) = random_design(6, 30, 5, 2);
    let config = FitConfig::new(Penalty::L2, 0.3);
    let mut r = ChaCha8Rng::seed_from_u64(60);
    let p = design.cols() + 1;
    let theta: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
    let f = |t: &[f64]| loss_and_gradient(&Params::from_slice(t), &design, &y, &config).unwrap();
    let (_, grad) = f(&theta);
    for _ in 0..50 {
        let dir: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let shifted =
            |s: f64| -> Vec<f64> { theta.iter().zip(&dir).map(|(t, d)| t + s * d).collect() };
        let numeric = (f(&shifted(h)).0 - f(&shifted(-h)).0) / (2.0 * h);
        let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        assert!((numeric - analytic).abs() <= 1e-6 * analytic.abs().max(1.0));
    }
}

#[test]
fn refits_are_bit_identical() {
    let d = gen_random_noise(5, 80, 11).unwrap();
    let cfg = FitConfig::new(Penalty::L1, 0.2);
    let a = fit(&d, 2, &cfg).unwrap();
    let b = fit(&d, 2, &cfg).unwrap();
    assert_eq!(a.model.to_json().unwrap(), b.model.to_json().unwrap());
}
