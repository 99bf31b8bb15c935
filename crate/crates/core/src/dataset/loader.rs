use std::path::Path;

use image::imageops::FilterType;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DatasetManifest, FeatureTable};
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::tensor::Tensor;

/// Decodes a PNG, promotes grayscale to RGB and resizes bilinearly to
/// `side`×`side` when the stored size differs.
pub fn load_image(path: &Path, side: usize) -> Result<RgbImage> {
    if side == 0 {
        return Err(Error::Parameter("image side must be positive".into()));
    }
    let decoded = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    let mut rgb = decoded.to_rgb8();
    if rgb.width() as usize != side || rgb.height() as usize != side {
        rgb = image::imageops::resize(&rgb, side as u32, side as u32, FilterType::Triangle);
    }
    RgbImage::from_rgb8(side, side, rgb.as_raw())
}

/// One mini-batch: images `[B,3,S,S]`, features `[B,F]`.
#[derive(Clone, Debug)]
pub struct Batch {
    pub ids: Vec<String>,
    pub images: Tensor,
    pub features: Tensor,
    pub labels: Vec<usize>,
}

/// Images and feature rows held in memory, aligned by image id.
#[derive(Clone, Debug)]
pub struct Dataset {
    ids: Vec<String>,
    labels: Vec<usize>,
    side: usize,
    images: Vec<Vec<f64>>,
    feature_columns: Vec<String>,
    features: Vec<f64>,
}

impl Dataset {
    /// Joins manifest entries with table rows. Every manifest id must have a
    /// feature row; table labels, when present, must agree with the manifest.
    pub fn load(manifest: &DatasetManifest, table: &FeatureTable, side: usize) -> Result<Self> {
        let rows = align(manifest, table)?;
        let images = manifest
            .entries
            .par_iter()
            .map(|e| load_image(&e.path, side).map(|img| img.to_chw()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(manifest, table, &rows, side, images)
    }

    /// Builds a dataset from already decoded CHW images in manifest order.
    pub fn from_images(
        manifest: &DatasetManifest,
        table: &FeatureTable,
        side: usize,
        images: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let rows = align(manifest, table)?;
        if images.len() != manifest.entries.len() {
            return Err(Error::Dimension(format!(
                "{} images for {} manifest entries",
                images.len(),
                manifest.entries.len()
            )));
        }
        Self::from_parts(manifest, table, &rows, side, images)
    }

    fn from_parts(
        manifest: &DatasetManifest,
        table: &FeatureTable,
        rows: &[usize],
        side: usize,
        images: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(bad) = images.iter().find(|im| im.len() != 3 * side * side) {
            return Err(Error::Dimension(format!(
                "image has {} values, expected 3x{side}x{side}",
                bad.len()
            )));
        }
        let mut features = Vec::with_capacity(rows.len() * table.n_cols());
        for &r in rows {
            features.extend_from_slice(table.row(r));
        }
        Ok(Dataset {
            ids: manifest.ids(),
            labels: manifest.labels(),
            side,
            images,
            feature_columns: table.columns().to_vec(),
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn feature_columns(&self) -> &[String] {
        &self.feature_columns
    }

    pub fn n_features(&self) -> usize {
        self.feature_columns.len()
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        let f = self.n_features();
        &self.features[i * f..(i + 1) * f]
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i]
    }

    /// Replaces the feature matrix, e.g. with a normalized table. Rows are
    /// looked up by id.
    pub fn with_features(mut self, table: &FeatureTable) -> Result<Self> {
        let mut features = Vec::with_capacity(self.len() * table.n_cols());
        for id in &self.ids {
            let row = table
                .row_by_id(id)
                .ok_or_else(|| Error::Alignment(format!("image {id:?} has no feature row")))?;
            features.extend_from_slice(row);
        }
        self.features = features;
        self.feature_columns = table.columns().to_vec();
        Ok(self)
    }

    /// Keeps the listed positions, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let f = self.n_features();
        let mut features = Vec::with_capacity(indices.len() * f);
        for &i in indices {
            features.extend_from_slice(self.feature_row(i));
        }
        Dataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            side: self.side,
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            feature_columns: self.feature_columns.clone(),
            features,
        }
    }

    /// Gathers the listed positions into one batch.
    pub fn batch(&self, indices: &[usize]) -> Batch {
        let s = self.side;
        let f = self.n_features();
        let mut images = Vec::with_capacity(indices.len() * 3 * s * s);
        let mut features = Vec::with_capacity(indices.len() * f);
        for &i in indices {
            images.extend_from_slice(&self.images[i]);
            features.extend_from_slice(self.feature_row(i));
        }
        let b = indices.len();
        Batch {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            images: Tensor::new(vec![b, 3, s, s], images).expect("batch image shape"),
            features: Tensor::new(vec![b, f], features).expect("batch feature shape"),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Shuffled batches for one training epoch.
    pub fn batch_iter(
        &self,
        batch: usize,
        seed: u64,
        epoch: usize,
    ) -> impl Iterator<Item = Batch> + '_ {
        batch_order(self.len(), batch, seed, epoch)
            .into_iter()
            .map(move |idx| self.batch(&idx))
    }

    /// Batches in dataset order.
    pub fn sequential_batches(&self, batch: usize) -> impl Iterator<Item = Batch> + '_ {
        let n = self.len();
        let batch = batch.max(1);
        (0..n)
            .step_by(batch)
            .map(move |start| self.batch(&(start..(start + batch).min(n)).collect::<Vec<_>>()))
    }
}

fn align(manifest: &DatasetManifest, table: &FeatureTable) -> Result<Vec<usize>> {
    let mut rows = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let r = table.position(&e.id).ok_or_else(|| {
            Error::Alignment(format!("image {:?} has no row in the feature table", e.id))
        })?;
        if let Some(labels) = table.labels() {
            if labels[r] != e.label {
                return Err(Error::Alignment(format!(
                    "image {:?}: manifest label {} but feature table label {}",
                    e.id, e.label, labels[r]
                )));
            }
        }
        rows.push(r);
    }
    Ok(rows)
}

/// Index batches for one epoch: a permutation of `0..n` seeded by
/// `(seed, epoch)`, chunked with the final partial batch kept.
pub fn batch_order(n: usize, batch: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    order.shuffle(&mut rng);
    order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}
