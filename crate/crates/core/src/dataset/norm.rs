use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{Error, Result};

/// Per-column z-score statistics fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation; strictly positive.
    pub std: Vec<f64>,
    /// Zero-variance columns left out of the normalized table.
    pub dropped: Vec<String>,
}

/// Fits statistics on the rows listed in `train_ids`.
pub fn fit_norm_stats(table: &FeatureTable, train_ids: &[String]) -> Result<NormStats> {
    if train_ids.is_empty() {
        return Err(Error::Config(
            "cannot fit normalization on an empty split".into(),
        ));
    }
    let rows: Vec<&[f64]> = train_ids
        .iter()
        .map(|id| {
            table
                .row_by_id(id)
                .ok_or_else(|| Error::Alignment(format!("training id {id:?} not in feature table")))
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    let mut stats = NormStats {
        columns: Vec::new(),
        mean: Vec::new(),
        std: Vec::new(),
        dropped: Vec::new(),
    };
    for (j, name) in table.columns().iter().enumerate() {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let std = (rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if std == 0.0 || std <= 1e-12 * mean.abs() {
            stats.dropped.push(name.clone());
        } else {
            stats.columns.push(name.clone());
            stats.mean.push(mean);
            stats.std.push(std);
        }
    }
    Ok(stats)
}

impl NormStats {
    fn column_positions(&self, table: &FeatureTable) -> Result<Vec<usize>> {
        self.columns
            .iter()
            .map(|c| {
                table.column_index(c).ok_or_else(|| {
                    Error::Schema(format!("feature column {c:?} missing from table"))
                })
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }
}

/// Z-scores the retained columns, in the statistics' column order.
pub fn apply_norm(table: &FeatureTable, stats: &NormStats) -> Result<FeatureTable> {
    let pos = stats.column_positions(table)?;
    let mut values = Vec::with_capacity(table.n_rows() * pos.len());
    for i in 0..table.n_rows() {
        let row = table.row(i);
        for (k, &j) in pos.iter().enumerate() {
            values.push((row[j] - stats.mean[k]) / stats.std[k]);
        }
    }
    FeatureTable::new(
        table.ids().to_vec(),
        stats.columns.clone(),
        values,
        table.labels().map(<[usize]>::to_vec),
    )
}

/// Inverse of [`apply_norm`] on a normalized table.
pub fn denormalize(table: &FeatureTable, stats: &NormStats) -> Result<FeatureTable> {
    let pos = stats.column_positions(table)?;
    let mut values = Vec::with_capacity(table.n_rows() * pos.len());
    for i in 0..table.n_rows() {
        let row = table.row(i);
        for (k, &j) in pos.iter().enumerate() {
            values.push(row[j] * stats.std[k] + stats.mean[k]);
        }
    }
    FeatureTable::new(
        table.ids().to_vec(),
        stats.columns.clone(),
        values,
        table.labels().map(<[usize]>::to_vec),
    )
}
