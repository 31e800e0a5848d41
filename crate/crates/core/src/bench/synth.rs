//! Synthetic generators: pure label noise and planted pairwise interactions.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const NOISE_DEFAULT_FEATURES: usize = 10;
pub const NOISE_DEFAULT_SAMPLES: usize = 100;
pub const PAIRWISE_DEFAULT_FEATURES: usize = 15;
pub const PAIRWISE_DEFAULT_SAMPLES: usize = 1000;
pub const PAIRWISE_DEFAULT_PAIRS: usize = 1;

fn feature_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
    Matrix::from_vec(rows, cols, data).expect("shape is consistent")
}

/// `X ~ U[0,1]^n`, `y ~ Bernoulli(0.5)` independent of `X`.
pub fn gen_random_noise(n: usize, samples: usize, seed_root: u64) -> Result<Dataset> {
    if n == 0 || samples == 0 {
        return Err(Error::invalid(
            "random-noise generator needs n >= 1 and N >= 1",
        ));
    }
    let mut rng = seed::rng(seed::derive(seed_root, &[seed::stream::GENERATOR, 0]));
    let x = uniform_matrix(&mut rng, samples, n);
    let y = (0..samples).map(|_| u8::from(rng.gen_bool(0.5))).collect();
    Dataset::new(
        "random_noise",
        x,
        y,
        feature_names(n),
        format!("random-noise n={n} N={samples} seed={seed_root}"),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseProvenance {
    pub generator: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub pairs: Vec<PlantedPair>,
}

/// Labels driven only by products `x_i x_j` of planted pairs.
///
/// The centered score `sum_p w_p (x_i x_j - 1/4)` is thresholded at its
/// empirical median: the top `floor(N/2)` rows (ties broken by row order)
/// are labelled positive, so even `N` gives an exact half/half split.
pub fn gen_pure_pairwise(
    n: usize,
    samples: usize,
    pairs: usize,
    seed_root: u64,
) -> Result<(Dataset, PairwiseProvenance)> {
    if n < 2 || samples < 2 {
        return Err(Error::invalid(
            "pure-pairwise generator needs n >= 2 and N >= 2",
        ));
    }
    let max_pairs = n * (n - 1) / 2;
    if pairs == 0 || pairs > max_pairs {
        return Err(Error::invalid(format!(
            "pairs must lie in 1..={max_pairs} for n = {n}, got {pairs}"
        )));
    }
    let mut rng = seed::rng(seed::derive(seed_root, &[seed::stream::GENERATOR, 1]));
    let x = uniform_matrix(&mut rng, samples, n);
    let mut planted: Vec<PlantedPair> = sample(&mut rng, max_pairs, pairs)
        .into_iter()
        .map(|flat| {
            let (i, j) = unrank_pair(n, flat);
            let magnitude = rng.gen_range(1.0..=2.0);
            let weight = if rng.gen_bool(0.5) {
                magnitude
            } else {
                -magnitude
            };
            PlantedPair { i, j, weight }
        })
        .collect();
    planted.sort_by_key(|p| (p.i, p.j));

    let score: Vec<f64> = x
        .iter_rows()
        .map(|row| {
            planted
                .iter()
                .map(|p| p.weight * (row[p.i] * row[p.j] - 0.25))
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..samples).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let positives = samples / 2;
    let mut y = vec![0u8; samples];
    for &r in &order[..positives] {
        y[r] = 1;
    }
    let threshold = 0.5 * (score[order[positives - 1]] + score[order[positives]]);
    let provenance = PairwiseProvenance {
        generator: "pure-pairwise".into(),
        n,
        samples,
        seed: seed_root,
        threshold,
        pairs: planted,
    };
    let note = serde_json::to_string(&provenance)?;
    let dataset = Dataset::new("pure_pairwise", x, y, feature_names(n), note)?;
    Ok((dataset, provenance))
}

/// Lexicographic pair `(i, j)`, `i < j`, with the given rank.
fn unrank_pair(n: usize, mut rank: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if rank < row {
            return (i, i + 1 + rank);
        }
        rank -= row;
    }
    unreachable!("pair rank out of range")
}
