//! Classification metrics at the 0.5 threshold plus ranking metrics.

use serde::{Deserialize, Serialize};

use crate::basis::classify;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    /// Absent when `y_true` contains a single class.
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    F1,
}

impl SelectionMetric {
    pub fn score(self, m: &MetricSet) -> f64 {
        match self {
            SelectionMetric::Accuracy => m.accuracy,
            SelectionMetric::F1 => m.f1,
        }
    }
}

impl std::str::FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(SelectionMetric::Accuracy),
            "f1" => Ok(SelectionMetric::F1),
            other => Err(Error::invalid(format!(
                "unknown selection metric '{other}' (expected accuracy or f1)"
            ))),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics for hard predictions `y_pred` and scores `y_score` in `[0, 1]`.
pub fn metrics(y_true: &[u8], y_pred: &[u8], y_score: &[f64]) -> Result<MetricSet> {
    if y_true.len() != y_pred.len() || y_true.len() != y_score.len() {
        return Err(Error::invalid(format!(
            "metric inputs differ in length: {} labels, {} predictions, {} scores",
            y_true.len(),
            y_pred.len(),
            y_score.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("metrics of an empty sample"));
    }
    if let Some(s) = y_score.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::invalid(format!("score {s} outside [0, 1]")));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (0, _) => fp += 1,
            _ => fn_ += 1,
        }
    }
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let precision = ratio(tp, tp + fp);
    let f1 = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    };
    Ok(MetricSet {
        accuracy: ratio(tp + tn, y_true.len()),
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        sensitivity,
        specificity,
        precision,
        f1,
        roc_auc: roc_auc(y_true, y_score),
        pr_auc: average_precision(y_true, y_score),
    })
}

/// Metrics from probabilities, thresholded at 0.5 (ties positive).
pub fn metrics_from_scores(y_true: &[u8], y_score: &[f64]) -> Result<MetricSet> {
    let pred: Vec<u8> = y_score.iter().map(|&p| classify(p)).collect();
    metrics(y_true, &pred, y_score)
}

/// Score groups in descending order: `(positives, negatives)` per distinct score.
fn descending_groups(y_true: &[u8], y_score: &[f64]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..y_true.len()).collect();
    order.sort_by(|&a, &b| y_score[b].total_cmp(&y_score[a]));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last = f64::NAN;
    for &i in &order {
        if groups.is_empty() || y_score[i] != last {
            groups.push((0, 0));
            last = y_score[i];
        }
        let g = groups.last_mut().expect("non-empty");
        if y_true[i] == 1 {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Area under the ROC curve by the trapezoidal rule over all thresholds.
pub fn roc_auc(y_true: &[u8], y_score: &[f64]) -> Option<f64> {
    let pos = y_true.iter().filter(|&&v| v == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    for (gp, gn) in descending_groups(y_true, y_score) {
        let (tp0, fp0) = (tp, fp);
        tp += gp;
        fp += gn;
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
    }
    Some(area / (pos as f64 * neg as f64))
}

/// Average precision: `sum_t (R_t - R_{t-1}) P_t` over descending thresholds.
pub fn average_precision(y_true: &[u8], y_score: &[f64]) -> Option<f64> {
    let pos = y_true.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y_true.len() {
        return None;
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for (gp, gn) in descending_groups(y_true, y_score) {
        tp += gp;
        seen += gp + gn;
        if gp > 0 {
            ap += (gp as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Some(ap)
}
