use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-vs-rest ROC curve of one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: usize,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps thresholds over the distinct scores in descending order; each
/// point classifies `score >= threshold` as positive.
pub fn roc_points(scores: &[f64], positive: &[bool]) -> Result<Vec<(f64, f64)>> {
    if scores.len() != positive.len() {
        return Err(Error::Dimension(format!(
            "{} scores against {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Validation(format!("score {i} is not finite")));
    }
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC needs both classes, got {p} positives and {n} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(points)
}

/// Trapezoidal area under a curve given as `(x, y)` points.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// AUC straight from scores.
pub fn auc_from_scores(scores: &[f64], positive: &[bool]) -> Result<f64> {
    Ok(auc(&roc_points(scores, positive)?))
}

/// ROC of `class` against the rest, scored by column `class` of `probs`.
pub fn roc_curve(
    probs: &[f64],
    classes: usize,
    labels: &[usize],
    class: usize,
) -> Result<RocCurve> {
    if probs.len() != labels.len() * classes {
        return Err(Error::Dimension(format!(
            "{} scores for {} samples of {classes} classes",
            probs.len(),
            labels.len()
        )));
    }
    let scores: Vec<f64> = probs.chunks(classes).map(|row| row[class]).collect();
    let positive: Vec<bool> = labels.iter().map(|&l| l == class).collect();
    let points = roc_points(&scores, &positive).map_err(|e| match e {
        Error::UndefinedMetric(m) => Error::UndefinedMetric(format!("class {class}: {m}")),
        other => other,
    })?;
    Ok(RocCurve {
        class,
        auc: auc(&points),
        points,
    })
}
