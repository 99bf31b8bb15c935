//! Confusion matrices, support-weighted classification metrics and
//! one-vs-rest ROC curves.

mod classification;
mod report;
mod roc;

pub use classification::{
    confusion_matrix, weighted_metrics, ClassScores, ConfusionMatrix, WeightedMetrics,
};
pub use report::{
    evaluate, report_from_probs, write_report_json, write_roc_csv, Evaluation, MetricsReport,
};
pub use roc::{auc, auc_from_scores, roc_curve, roc_points, RocCurve};
