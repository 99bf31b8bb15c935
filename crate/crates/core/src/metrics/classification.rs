use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with rows indexed by true class and columns by prediction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes * classes {
            return Err(Error::Dimension(format!(
                "{} counts for a {classes}x{classes} matrix",
                counts.len()
            )));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row sums.
    pub fn support(&self) -> Vec<u64> {
        (0..self.classes)
            .map(|t| (0..self.classes).map(|p| self.get(t, p)).sum())
            .collect()
    }

    /// Column sums.
    pub fn predicted(&self) -> Vec<u64> {
        (0..self.classes)
            .map(|p| (0..self.classes).map(|t| self.get(t, p)).sum())
            .collect()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }
}

pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    classes: usize,
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension(format!(
            "{} labels against {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut counts = vec![0u64; classes * classes];
    for (i, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        if t >= classes || p >= classes {
            return Err(Error::Validation(format!(
                "sample {i}: label {t} or prediction {p} outside [0, {classes})"
            )));
        }
        counts[t * classes + p] += 1;
    }
    ConfusionMatrix::from_counts(classes, counts)
}

/// Support-weighted averages of per-class scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub precision: f64,
    pub f1: f64,
    /// Per-class precision, recall and F1.
    pub per_class: Vec<ClassScores>,
    /// Classes whose precision, recall or F1 had a zero denominator and
    /// were set to 0.
    pub zero_division: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

pub fn weighted_metrics(cm: &ConfusionMatrix) -> Result<WeightedMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::UndefinedMetric("confusion matrix is empty".into()));
    }
    let n = total as f64;
    let support = cm.support();
    let predicted = cm.predicted();
    let mut out = WeightedMetrics {
        accuracy: cm.trace() as f64 / n,
        sensitivity: 0.0,
        precision: 0.0,
        f1: 0.0,
        per_class: Vec::with_capacity(cm.classes()),
        zero_division: Vec::new(),
    };
    for c in 0..cm.classes() {
        let tp = cm.get(c, c) as f64;
        let mut flagged = false;
        let mut ratio = |num: f64, den: u64| {
            if den == 0 {
                flagged = true;
                0.0
            } else {
                num / den as f64
            }
        };
        let precision = ratio(tp, predicted[c]);
        let recall = ratio(tp, support[c]);
        let f1 = if precision + recall == 0.0 {
            flagged = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        if flagged {
            out.zero_division.push(c);
        }
        let w = support[c] as f64 / n;
        out.sensitivity += w * recall;
        out.precision += w * precision;
        out.f1 += w * f1;
        out.per_class.push(ClassScores {
            precision,
            recall,
            f1,
            support: support[c],
        });
    }
    Ok(out)
}
