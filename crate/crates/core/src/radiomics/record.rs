use super::first_order::{first_order_features, FIRST_ORDER_NAMES};
use super::glcm::{glcm_features, Direction, GLCM_NAMES};
use super::glrlm::{glrlm_features, GLRLM_NAMES};
use super::glszm::{glszm_features, GLSZM_NAMES};
use super::log_filter::{log_filter, LOG_SIGMAS};
use super::mask::{make_central_mask, make_peripheral_mask, RoiMask};
use super::quantize::quantize;
use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::raster::GrayImage;

pub const DEFAULT_GRAY_LEVELS: usize = 32;

/// Number of features in one region record.
pub const RECORD_LEN: usize = 46;

/// Column prefix marking non-feature diagnostic columns, dropped on merge.
pub const DIAGNOSTIC_PREFIX: &str = "diagnostics_";

/// Feature names of a region record, in record order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(RECORD_LEN);
    names.extend(FIRST_ORDER_NAMES.iter().map(|n| format!("fo_{n}")));
    names.extend(GLCM_NAMES.iter().map(|n| format!("glcm_{n}")));
    names.extend(GLRLM_NAMES.iter().map(|n| format!("glrlm_{n}")));
    names.extend(GLSZM_NAMES.iter().map(|n| format!("glszm_{n}")));
    for i in 1..=LOG_SIGMAS.len() {
        names.extend(FIRST_ORDER_NAMES.iter().map(|n| format!("log{i}_fo_{n}")));
    }
    names
}

/// Named feature values of one image region.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiomicsRecord {
    pub image_id: String,
    pub features: Vec<(String, f64)>,
}

impl RadiomicsRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.features
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    pub fn values(&self) -> Vec<f64> {
        self.features.iter().map(|&(_, v)| v).collect()
    }
}

/// First-order, GLCM, GLRLM and GLSZM features of the raw image plus
/// first-order features of each LoG response, all over `mask`.
pub fn extract_record(
    image_id: &str,
    img: &GrayImage,
    mask: &RoiMask,
    n_levels: usize,
) -> Result<RadiomicsRecord> {
    let q = quantize(img, mask, n_levels)?;
    let mut values = Vec::with_capacity(RECORD_LEN);
    values.extend(first_order_features(img, mask)?.values());
    values.extend(glcm_features(&q, &Direction::ALL)?.values());
    values.extend(glrlm_features(&q, &Direction::ALL)?.values());
    values.extend(glszm_features(&q)?.values());
    for sigma in LOG_SIGMAS {
        let filtered = log_filter(img, sigma)?;
        values.extend(first_order_features(&filtered, mask)?.values());
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::FeatureUndefined(format!(
            "{} is not finite for {image_id}",
            feature_names()[i]
        )));
    }
    Ok(RadiomicsRecord {
        image_id: image_id.to_string(),
        features: feature_names().into_iter().zip(values).collect(),
    })
}

/// Central-disk and peripheral records for one image.
pub fn extract_regions(
    image_id: &str,
    img: &GrayImage,
    radius_fraction: f64,
    n_levels: usize,
) -> Result<(RadiomicsRecord, RadiomicsRecord)> {
    let central = make_central_mask(img.width(), img.height(), radius_fraction)?;
    let peripheral = make_peripheral_mask(img.width(), img.height(), radius_fraction)?;
    Ok((
        extract_record(image_id, img, &central, n_levels)?,
        extract_record(image_id, img, &peripheral, n_levels)?,
    ))
}

/// Stacks records sharing one key set into a table.
pub fn records_to_table(
    records: &[RadiomicsRecord],
    labels: Option<Vec<usize>>,
) -> Result<FeatureTable> {
    let columns: Vec<String> = match records.first() {
        Some(r) => r.features.iter().map(|(n, _)| n.clone()).collect(),
        None => feature_names(),
    };
    let mut values = Vec::with_capacity(records.len() * columns.len());
    for r in records {
        if r.features.len() != columns.len()
            || r.features.iter().zip(&columns).any(|((n, _), c)| n != c)
        {
            return Err(Error::Schema(format!(
                "record {} has a different key set",
                r.image_id
            )));
        }
        values.extend(r.values());
    }
    FeatureTable::new(
        records.iter().map(|r| r.image_id.clone()).collect(),
        columns,
        values,
        labels,
    )
}

/// Joins central and peripheral tables on image id, prefixing columns with
/// `central_` / `peripheral_` and dropping diagnostic columns. Rows follow
/// the central table's order; labels are taken from whichever side has them.
pub fn merge_tables(central: &FeatureTable, peripheral: &FeatureTable) -> Result<FeatureTable> {
    let mut missing: Vec<String> = central
        .ids()
        .iter()
        .filter(|id| peripheral.position(id).is_none())
        .chain(
            peripheral
                .ids()
                .iter()
                .filter(|id| central.position(id).is_none()),
        )
        .cloned()
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::Join { missing });
    }
    let keep = |t: &FeatureTable| -> Vec<usize> {
        (0..t.n_cols())
            .filter(|&j| !t.columns()[j].starts_with(DIAGNOSTIC_PREFIX))
            .collect()
    };
    let (kc, kp) = (keep(central), keep(peripheral));
    let columns: Vec<String> = kc
        .iter()
        .map(|&j| format!("central_{}", central.columns()[j]))
        .chain(
            kp.iter()
                .map(|&j| format!("peripheral_{}", peripheral.columns()[j])),
        )
        .collect();
    let mut values = Vec::with_capacity(central.n_rows() * columns.len());
    let mut labels = Vec::with_capacity(central.n_rows());
    for (i, id) in central.ids().iter().enumerate() {
        let c_row = central.row(i);
        let p_row = peripheral.row_by_id(id).expect("ids checked above");
        values.extend(kc.iter().map(|&j| c_row[j]));
        values.extend(kp.iter().map(|&j| p_row[j]));
        let (lc, lp) = (central.label_of(id), peripheral.label_of(id));
        if let (Some(a), Some(b)) = (lc, lp) {
            if a != b {
                return Err(Error::Validation(format!(
                    "image {id} labelled {a} centrally but {b} peripherally"
                )));
            }
        }
        labels.push(lc.or(lp));
    }
    let labels = if labels.iter().all(Option::is_some) && !labels.is_empty() {
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else {
        None
    };
    FeatureTable::new(central.ids().to_vec(), columns, values, labels)
}
