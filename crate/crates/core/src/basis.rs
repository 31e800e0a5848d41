//! The Shapley-basis feature map, design matrices and the fitted model.
//!
//! For a coalition `A` and a point `x` in the unit cube the basis function is
//!
//! ```text
//! phi_A(x) = sum_{C ⊆ A} b_{|A| - |C|} min_{i in C} x_i,      min over ∅ = 0
//! ```
//!
//! where `b_d` are the Bernoulli numbers with `b_1 = -1/2`. This is the dual
//! of the Möbius-to-interaction map in [`crate::game`], so a linear predictor
//! `sum_A I(A) phi_A(x)` equals the Choquet integral of the game whose
//! interaction indices are `I`. The coefficients `1, -1/2, 1/6, 0, -1/30, ...`
//! coincide with `(-1)^d / (d + 1)` for `d <= 1`, which covers singletons and
//! pairs.

use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::{self, Coalition, MAX_UNIVERSE};
use crate::error::{Error, Result};
use crate::game::{self, Basis, SetFunction};
use crate::matrix::Matrix;

/// Bernoulli numbers `b_0..=b_62` with the `b_1 = -1/2` convention.
///
/// Taken from exact rationals; the float recurrence loses digits too early.
pub fn bernoulli_numbers() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        #[allow(clippy::excessive_precision, clippy::eq_op)]
        const NONZERO: [(usize, f64); 33] = [
            (0, 1.0 / 1.0),
            (1, -1.0 / 2.0),
            (2, 1.0 / 6.0),
            (4, -1.0 / 30.0),
            (6, 1.0 / 42.0),
            (8, -1.0 / 30.0),
            (10, 5.0 / 66.0),
            (12, -691.0 / 2730.0),
            (14, 7.0 / 6.0),
            (16, -3617.0 / 510.0),
            (18, 43867.0 / 798.0),
            (20, -174611.0 / 330.0),
            (22, 854513.0 / 138.0),
            (24, -236364091.0 / 2730.0),
            (26, 8553103.0 / 6.0),
            (28, -23749461029.0 / 870.0),
            (30, 8615841276005.0 / 14322.0),
            (32, -7709321041217.0 / 510.0),
            (34, 2577687858367.0 / 6.0),
            (36, -26315271553053477373.0 / 1919190.0),
            (38, 2929993913841559.0 / 6.0),
            (40, -261082718496449122051.0 / 13530.0),
            (42, 1520097643918070802691.0 / 1806.0),
            (44, -27833269579301024235023.0 / 690.0),
            (46, 596451111593912163277961.0 / 282.0),
            (48, -5609403368997817686249127547.0 / 46410.0),
            (50, 495057205241079648212477525.0 / 66.0),
            (52, -801165718135489957347924991853.0 / 1590.0),
            (54, 29149963634884862421418123812691.0 / 798.0),
            (56, -2479392929313226753685415739663229.0 / 870.0),
            (58, 84483613348880041862046775994036021.0 / 354.0),
            (
                60,
                -1215233140483755572040304994079820246041491.0 / 56786730.0,
            ),
            (62, 12300585434086858541953039857403386151.0 / 6.0),
        ];
        let mut b = vec![0.0f64; MAX_UNIVERSE + 1];
        for (m, v) in NONZERO {
            b[m] = v;
        }
        b
    })
}

/// Weights `w[a][r]` such that `phi_A(x) = sum_r w[a][r] x_(r)` where
/// `x_(0) <= x_(1) <= ...` are the members' values sorted ascending.
///
/// A sub-coalition whose minimum is the member of rank `r` picks its other
/// `j` members among the `a - 1 - r` larger ones, contributing `b_{a-1-j}`.
fn rank_weights() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let b = bernoulli_numbers();
        let mut out = vec![Vec::new()];
        for a in 1..=MAX_UNIVERSE {
            let w = (0..a)
                .map(|r| {
                    let m = a - 1 - r;
                    let mut c = 1.0f64; // C(m, j)
                    let mut acc = 0.0;
                    for j in 0..=m {
                        acc += c * b[a - 1 - j];
                        c = c * (m - j) as f64 / (j + 1) as f64;
                    }
                    acc
                })
                .collect();
            out.push(w);
        }
        out
    })
}

fn check_point(x: &[f64]) -> Result<()> {
    for (feature, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitCube { feature, value });
        }
    }
    Ok(())
}

/// Evaluates `phi_A(x)` for a point of the unit cube.
pub fn phi(a: Coalition, x: &[f64]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("basis function of the empty coalition"));
    }
    if !a.fits(x.len()) {
        return Err(Error::DimensionMismatch {
            expected: a.members().last().unwrap_or(0) + 1,
            found: x.len(),
        });
    }
    check_point(x)?;
    let mut vals: Vec<f64> = a.members().map(|i| x[i]).collect();
    vals.sort_by(f64::total_cmp);
    Ok(phi_sorted(&vals))
}

#[inline]
fn phi_sorted(sorted: &[f64]) -> f64 {
    match sorted.len() {
        1 => sorted[0],
        // min - (x_i + x_j)/2
        2 => 0.5 * (sorted[0] - sorted[1]),
        a => rank_weights()[a]
            .iter()
            .zip(sorted)
            .map(|(w, v)| w * v)
            .sum(),
    }
}

/// Evaluates every basis function of `coalitions` at one point.
fn phi_row(coalitions: &[Coalition], x: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
    for (dst, c) in out.iter_mut().zip(coalitions) {
        *dst = match c.len() {
            1 => x[c.mask().trailing_zeros() as usize],
            2 => {
                let mut m = c.members();
                let (i, j) = (m.next().unwrap(), m.next().unwrap());
                x[i].min(x[j]) - 0.5 * (x[i] + x[j])
            }
            _ => {
                scratch.clear();
                scratch.extend(c.members().map(|i| x[i]));
                scratch.sort_by(f64::total_cmp);
                phi_sorted(scratch)
            }
        };
    }
}

/// Design matrix `Phi` with one column per coalition in canonical order.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub values: Matrix,
    pub coalitions: Vec<Coalition>,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Largest row Euclidean norm.
    pub fn max_row_norm(&self) -> f64 {
        self.values
            .iter_rows()
            .map(crate::matrix::norm2)
            .fold(0.0, f64::max)
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            values: self.values.select_rows(idx),
            coalitions: self.coalitions.clone(),
        }
    }
}

/// Builds the design matrix of already-normalized inputs.
pub fn design_matrix(x: &Matrix, k: usize) -> Result<DesignMatrix> {
    let n = x.cols();
    let coalitions = coalition::enumerate_coalitions(n, k)?;
    for (i, row) in x.iter_rows().enumerate() {
        check_point(row).map_err(|e| match e {
            Error::OutOfUnitCube { feature, value } => Error::data(format!(
                "design matrix input at row {i}, feature {feature} is {value}, outside [0, 1]"
            )),
            other => other,
        })?;
    }
    Ok(design_matrix_unchecked(x, &coalitions))
}

pub(crate) fn design_matrix_unchecked(x: &Matrix, coalitions: &[Coalition]) -> DesignMatrix {
    let p = coalitions.len();
    let mut values = Matrix::zeros(x.rows(), p);
    if p > 0 {
        values
            .as_mut_slice()
            .par_chunks_mut(p)
            .enumerate()
            .for_each_init(Vec::new, |scratch, (i, out)| {
                phi_row(coalitions, x.row(i), out, scratch)
            });
    }
    DesignMatrix {
        values,
        coalitions: coalitions.to_vec(),
    }
}

/// Per-feature min-max bounds learned on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Normalization(pub Vec<(f64, f64)>);

impl Normalization {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::data("cannot learn normalization from zero rows"));
        }
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); x.cols()];
        for row in x.iter_rows() {
            for (b, &v) in bounds.iter_mut().zip(row) {
                if !v.is_finite() {
                    return Err(Error::data(format!("non-finite feature value {v}")));
                }
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        Ok(Normalization(bounds))
    }

    pub fn identity(n: usize) -> Self {
        Normalization(vec![(0.0, 1.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Maps one value into `[0, 1]`, clipping out-of-range values;
    /// degenerate features map to 0.
    #[inline]
    pub fn scale(&self, feature: usize, v: f64) -> f64 {
        let (lo, hi) = self.0[feature];
        if hi <= lo {
            return 0.0;
        }
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn apply_row(&self, raw: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(raw).enumerate() {
            *o = self.scale(j, v);
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Bias plus Shapley interaction indices for all coalitions up to order `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct ShapleyModel {
    bias: f64,
    indices: SetFunction,
    feature_names: Vec<String>,
    normalization: Normalization,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    n: usize,
    k: usize,
    bias: f64,
    normalization: Vec<[f64; 2]>,
    feature_names: Vec<String>,
    indices: Vec<f64>,
}

impl From<ShapleyModel> for ModelRepr {
    fn from(m: ShapleyModel) -> Self {
        ModelRepr {
            n: m.n(),
            k: m.k(),
            bias: m.bias,
            normalization: m.normalization.0.iter().map(|&(a, b)| [a, b]).collect(),
            feature_names: m.feature_names,
            indices: m.indices.into_values(),
        }
    }
}

impl TryFrom<ModelRepr> for ShapleyModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let indices = SetFunction::new(r.n, r.k, Basis::Shapley, r.indices)?;
        ShapleyModel::new(
            r.bias,
            indices,
            r.feature_names,
            Normalization(r.normalization.into_iter().map(|[a, b]| (a, b)).collect()),
        )
    }
}

impl ShapleyModel {
    pub fn new(
        bias: f64,
        indices: SetFunction,
        feature_names: Vec<String>,
        normalization: Normalization,
    ) -> Result<Self> {
        if indices.basis() != Basis::Shapley {
            return Err(Error::BasisMismatch {
                expected: Basis::Shapley,
                found: indices.basis(),
            });
        }
        let n = indices.n();
        if feature_names.len() != n {
            return Err(Error::invalid(format!(
                "{} feature names for a model on {n} features",
                feature_names.len()
            )));
        }
        if normalization.len() != n {
            return Err(Error::invalid(format!(
                "{} normalization bounds for a model on {n} features",
                normalization.len()
            )));
        }
        if let Some((j, _)) = normalization
            .0
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo <= hi))
        {
            return Err(Error::invalid(format!(
                "normalization bounds of feature {j} are not ordered"
            )));
        }
        Ok(ShapleyModel {
            bias,
            indices,
            feature_names,
            normalization,
        })
    }

    pub fn n(&self) -> usize {
        self.indices.n()
    }

    pub fn k(&self) -> usize {
        self.indices.k()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn indices(&self) -> &SetFunction {
        &self.indices
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// Bias followed by the indices, the vector the optimizer works on.
    pub fn parameters(&self) -> Vec<f64> {
        std::iter::once(self.bias)
            .chain(self.indices.values().iter().copied())
            .collect()
    }

    /// Number of stored parameters, bias included.
    pub fn parameter_count(&self) -> usize {
        1 + self.indices.values().len()
    }

    /// Logit of a point that is already in the unit cube.
    pub fn logit_normalized(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        check_point(x)?;
        let coalitions = self.indices.coalitions();
        let mut row = vec![0.0; coalitions.len()];
        phi_row(&coalitions, x, &mut row, &mut Vec::new());
        Ok(self.bias + crate::matrix::dot(&row, self.indices.values()))
    }

    /// `beta + sum_A I(A) phi_A(x)` for a raw feature vector.
    pub fn logit(&self, x_raw: &[f64]) -> Result<f64> {
        if x_raw.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x_raw.len(),
            });
        }
        let mut x = vec![0.0; x_raw.len()];
        self.normalization.apply_row(x_raw, &mut x);
        self.logit_normalized(&x)
    }

    /// Same value as [`logit_normalized`](Self::logit_normalized), computed
    /// through the Möbius representation and the Choquet integral.
    pub fn logit_via_mobius(&self, x: &[f64]) -> Result<f64> {
        let m = game::mobius_from_shapley(&self.indices)?;
        Ok(self.bias + game::choquet_mobius(&m, x)?)
    }

    /// Logits of already-normalized rows.
    pub fn logits_normalized(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.cols(),
            });
        }
        let coalitions = self.indices.coalitions();
        let design = design_matrix_unchecked(x, &coalitions);
        Ok(design
            .values
            .iter_rows()
            .map(|r| self.bias + crate::matrix::dot(r, self.indices.values()))
            .collect())
    }

    pub fn predict_proba(&self, x_raw: &Matrix) -> Result<Vec<f64>> {
        let x = self.normalization.apply(x_raw)?;
        Ok(self
            .logits_normalized(&x)?
            .into_iter()
            .map(sigmoid)
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Class label at probability threshold 0.5; ties go to the positive class.
#[inline]
pub fn classify(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Direct sum over sub-coalitions with Bernoulli coefficients.
    fn phi_by_subsets(a: Coalition, x: &[f64]) -> f64 {
        let b = bernoulli_numbers();
        a.subsets()
            .map(|c| b[a.len() - c.len()] * c.min_over(x))
            .sum()
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers();
        let want = [
            1.0,
            -0.5,
            1.0 / 6.0,
            0.0,
            -1.0 / 30.0,
            0.0,
            1.0 / 42.0,
            0.0,
            -1.0 / 30.0,
        ];
        for (got, want) in b.iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn phi_singletons_and_pairs() {
        let x = [0.4, 0.8, 0.1];
        assert_eq!(phi(Coalition::singleton(1), &x).unwrap(), 0.8);
        assert_abs_diff_eq!(
            phi(Coalition::pair(0, 1), &x).unwrap(),
            -0.2,
            epsilon = 1e-15
        );
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(phi(Coalition::pair(0, 2), &[t, 0.5, t]).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_matches_subset_expansion() {
        let x = [0.91, 0.13, 0.55, 0.72, 0.05, 0.38];
        for c in coalition::enumerate_coalitions(6, 6).unwrap() {
            assert_abs_diff_eq!(phi(c, &x).unwrap(), phi_by_subsets(c, &x), epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_rejects_bad_input() {
        assert!(phi(Coalition::EMPTY, &[0.5]).is_err());
        assert!(phi(Coalition::singleton(0), &[1.5]).is_err());
        assert!(phi(Coalition::singleton(2), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn design_matrix_columns() {
        let x = Matrix::from_rows(&[[0.4, 0.8]]).unwrap();
        let d = design_matrix(&x, 2).unwrap();
        assert_eq!(d.cols(), 3);
        assert_abs_diff_eq!(d.row(0)[2], -0.2, epsilon = 1e-15);
        assert_eq!(&d.row(0)[..2], &[0.4, 0.8]);

        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [0.9, 0.0, 1.0]]).unwrap();
        assert_eq!(design_matrix(&x, 1).unwrap().values, x);

        let x = Matrix::zeros(3, 8);
        assert_eq!(design_matrix(&x, 2).unwrap().cols(), 36);

        let bad = Matrix::from_rows(&[[0.1, 2.0]]).unwrap();
        assert!(matches!(design_matrix(&bad, 2), Err(Error::Data(_))));
    }

    #[test]
    fn normalization_clips_and_handles_degenerate_features() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [10.0, 5.0]]).unwrap();
        let norm = Normalization::fit(&x).unwrap();
        assert_eq!(norm.0, vec![(0.0, 10.0), (5.0, 5.0)]);
        assert_eq!(norm.scale(0, 5.0), 0.5);
        assert_eq!(norm.scale(0, -3.0), 0.0);
        assert_eq!(norm.scale(0, 30.0), 1.0);
        assert_eq!(norm.scale(1, 7.0), 0.0);
    }

    fn toy_model() -> ShapleyModel {
        let indices = SetFunction::new(2, 2, Basis::Shapley, vec![0.6, 0.4, 0.2]).unwrap();
        ShapleyModel::new(
            0.0,
            indices,
            vec!["a".into(), "b".into()],
            Normalization::identity(2),
        )
        .unwrap()
    }

    #[test]
    fn worked_example_matches_mobius_path() {
        let m = toy_model();
        let x = [0.4, 0.8];
        // m = (0.5, 0.3, 0.2), Choquet = 0.52
        assert_abs_diff_eq!(m.logit(&x).unwrap(), 0.52, epsilon = 1e-15);
        assert_abs_diff_eq!(m.logit_via_mobius(&x).unwrap(), 0.52, epsilon = 1e-15);
        let p = m.predict_proba(&Matrix::from_rows(&[x]).unwrap()).unwrap();
        assert_abs_diff_eq!(p[0], sigmoid(0.52), epsilon = 1e-15);
    }

    #[test]
    fn zero_model_predicts_sigmoid_of_bias() {
        let indices = SetFunction::zeros(3, 2, Basis::Shapley).unwrap();
        let model = ShapleyModel::new(
            30.0,
            indices,
            vec!["a".into(), "b".into(), "c".into()],
            Normalization::identity(3),
        )
        .unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [1.0, 0.0, 0.5]]).unwrap();
        for p in model.predict_proba(&x).unwrap() {
            assert!(p > 1.0 - 1e-9 && p < 1.0);
        }
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn logit_checks_dimensions() {
        let m = toy_model();
        assert!(matches!(
            m.logit(&[0.1]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        let x = Matrix::zeros(1, 3);
        assert!(m.predict_proba(&x).is_err());
    }

    #[test]
    fn raw_inputs_are_normalized_and_clipped() {
        let indices = SetFunction::new(1, 1, Basis::Shapley, vec![2.0]).unwrap();
        let m = ShapleyModel::new(
            -1.0,
            indices,
            vec!["a".into()],
            Normalization(vec![(10.0, 20.0)]),
        )
        .unwrap();
        assert_eq!(m.logit(&[15.0]).unwrap(), 0.0);
        assert_eq!(m.logit(&[25.0]).unwrap(), 1.0);
        assert_eq!(m.logit(&[0.0]).unwrap(), -1.0);
    }

    #[test]
    fn model_json_is_bit_exact() {
        let indices = SetFunction::new(
            3,
            2,
            Basis::Shapley,
            vec![
                0.1 + 0.2,
                -1e-300,
                1.0 / 3.0,
                std::f64::consts::PI,
                -0.0,
                5e-324,
            ],
        )
        .unwrap();
        let m = ShapleyModel::new(
            0.7 - 1e-17,
            indices,
            vec!["x".into(), "y".into(), "z".into()],
            Normalization(vec![(0.1, 0.9), (-3.5, 1e10), (2.0, 2.0)]),
        )
        .unwrap();
        let text = m.to_json().unwrap();
        let back = ShapleyModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.parameters().iter().zip(m.parameters()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "n",
            "k",
            "bias",
            "normalization",
            "feature_names",
            "indices",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn model_json_rejects_inconsistent_shapes() {
        let text = r#"{"n":2,"k":2,"bias":0,"normalization":[[0,1],[0,1]],"feature_names":["a","b"],"indices":[1,2]}"#;
        assert!(ShapleyModel::from_json(text).is_err());
        let text = r#"{"n":2,"k":1,"bias":0,"normalization":[[1,0],[0,1]],"feature_names":["a","b"],"indices":[1,2]}"#;
        assert!(ShapleyModel::from_json(text).is_err());
    }
}
