use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classification::{confusion_matrix, weighted_metrics, ConfusionMatrix};
use super::roc::{roc_curve, RocCurve};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::model::{predict_logits, Parameters};
use crate::tensor::{argmax_rows, softmax_rows};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub precision: f64,
    pub f1: f64,
    /// One-vs-rest AUC per class; `None` when the class is absent from, or
    /// is the only class in, the evaluated split.
    pub auc: Vec<Option<f64>>,
    pub support: Vec<u64>,
    pub zero_division: Vec<usize>,
    pub confusion: ConfusionMatrix,
}

/// Metrics from per-sample class probabilities (row-major `[n, classes]`).
pub fn report_from_probs(
    probs: &[f64],
    classes: usize,
    labels: &[usize],
) -> Result<(MetricsReport, Vec<RocCurve>)> {
    if probs.len() != labels.len() * classes {
        return Err(Error::Dimension(format!(
            "{} probabilities for {} samples of {classes} classes",
            probs.len(),
            labels.len()
        )));
    }
    let preds: Vec<usize> = probs
        .chunks(classes)
        .map(|row| (0..classes).fold(0, |b, c| if row[c] > row[b] { c } else { b }))
        .collect();
    let cm = confusion_matrix(labels, &preds, classes)?;
    let w = weighted_metrics(&cm)?;
    let mut auc = Vec::with_capacity(classes);
    let mut curves = Vec::new();
    for c in 0..classes {
        match roc_curve(probs, classes, labels, c) {
            Ok(curve) => {
                auc.push(Some(curve.auc));
                curves.push(curve);
            }
            Err(Error::UndefinedMetric(_)) => auc.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok((
        MetricsReport {
            n_samples: labels.len(),
            accuracy: w.accuracy,
            sensitivity: w.sensitivity,
            precision: w.precision,
            f1: w.f1,
            auc,
            support: cm.support(),
            zero_division: w.zero_division,
            confusion: cm,
        },
        curves,
    ))
}

/// Output of [`evaluate`]: the report, ROC curves and per-sample scores.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub curves: Vec<RocCurve>,
    pub probs: Vec<f64>,
    pub predictions: Vec<usize>,
}

/// Eval-mode forward over `data` in order, batch by batch.
pub fn evaluate(params: &Parameters, data: &Dataset, batch: usize) -> Result<Evaluation> {
    let classes = params.config().num_classes;
    let mut probs = Vec::with_capacity(data.len() * classes);
    let mut predictions = Vec::with_capacity(data.len());
    for b in data.sequential_batches(batch) {
        let p = softmax_rows(&predict_logits(params, &b.images, &b.features)?)?;
        predictions.extend(argmax_rows(&p)?);
        probs.extend_from_slice(p.data());
    }
    let (report, curves) = report_from_probs(&probs, classes, data.labels())?;
    Ok(Evaluation {
        report,
        curves,
        probs,
        predictions,
    })
}

pub fn write_report_json(path: &Path, report: &MetricsReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Validation(format!("serializing metrics: {e}")))?;
    write_atomic(path, (text + "\n").as_bytes())
}

/// `class,fpr,tpr` rows, curves in class order.
pub fn write_roc_csv(path: &Path, curves: &[RocCurve]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "class,fpr,tpr").expect("write to memory");
    for c in curves {
        for (fpr, tpr) in &c.points {
            writeln!(out, "{},{:.17e},{:.17e}", c.class, fpr, tpr).expect("write to memory");
        }
    }
    write_atomic(path, &out)
}
