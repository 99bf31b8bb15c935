//! Gray-level co-occurrence matrix and Haralick descriptors.

use super::quantize::QuantizedRegion;
use crate::error::{Error, Result};

/// Pixel-pair displacement at distance 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    /// `(d_row, d_col)`; rows grow downwards, so 45 degrees points up-right.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (0, 1),
            Direction::Deg45 => (-1, 1),
            Direction::Deg90 => (-1, 0),
            Direction::Deg135 => (-1, -1),
        }
    }
}

pub const GLCM_NAMES: [&str; 6] = [
    "contrast",
    "correlation",
    "energy",
    "homogeneity",
    "entropy",
    "dissimilarity",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GlcmFeatures {
    pub contrast: f64,
    /// Defined as 1 when the marginal variance vanishes.
    pub correlation: f64,
    /// Angular second moment.
    pub energy: f64,
    /// Inverse difference moment.
    pub homogeneity: f64,
    pub entropy: f64,
    pub dissimilarity: f64,
}

impl GlcmFeatures {
    pub fn values(&self) -> [f64; 6] {
        [
            self.contrast,
            self.correlation,
            self.energy,
            self.homogeneity,
            self.entropy,
            self.dissimilarity,
        ]
    }
}

/// Symmetric pair counts for one direction, `n_levels x n_levels` row-major.
/// A pair is counted only when both pixels are inside the mask.
pub fn cooccurrence_counts(q: &QuantizedRegion, dir: Direction) -> Vec<u64> {
    let ng = q.n_levels();
    let (dr, dc) = dir.offset();
    let mut counts = vec![0u64; ng * ng];
    for r in 0..q.height() as isize {
        for c in 0..q.width() as isize {
            if let (Some(a), Some(b)) = (q.level(r, c), q.level(r + dr, c + dc)) {
                let (a, b) = (a as usize - 1, b as usize - 1);
                counts[a * ng + b] += 1;
                counts[b * ng + a] += 1;
            }
        }
    }
    counts
}

/// Mean of the per-direction normalized matrices. Directions without any
/// valid pair are left out of the mean.
pub fn glcm_matrix(q: &QuantizedRegion, dirs: &[Direction]) -> Result<Vec<f64>> {
    let ng = q.n_levels();
    let mut acc = vec![0.0; ng * ng];
    let mut used = 0;
    for &d in dirs {
        let counts = cooccurrence_counts(q, d);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            continue;
        }
        used += 1;
        for (a, &c) in acc.iter_mut().zip(&counts) {
            *a += c as f64 / total as f64;
        }
    }
    if used == 0 {
        return Err(Error::FeatureUndefined(
            "no pair of adjacent masked pixels for the co-occurrence matrix".into(),
        ));
    }
    acc.iter_mut().for_each(|a| *a /= used as f64);
    Ok(acc)
}

pub fn glcm_features(q: &QuantizedRegion, dirs: &[Direction]) -> Result<GlcmFeatures> {
    let ng = q.n_levels();
    let p = glcm_matrix(q, dirs)?;
    let cell = |i: usize, j: usize| p[i * ng + j];

    let mut mu = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            mu += (i + 1) as f64 * cell(i, j);
        }
    }
    let mut var = 0.0;
    let mut cov = 0.0;
    let (mut contrast, mut energy, mut homogeneity, mut entropy, mut dissimilarity) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..ng {
        for j in 0..ng {
            let pij = cell(i, j);
            if pij == 0.0 {
                continue;
            }
            let (gi, gj) = ((i + 1) as f64, (j + 1) as f64);
            let d = gi - gj;
            contrast += d * d * pij;
            dissimilarity += d.abs() * pij;
            homogeneity += pij / (1.0 + d * d);
            energy += pij * pij;
            entropy -= pij * pij.log2();
            var += (gi - mu) * (gi - mu) * pij;
            cov += (gi - mu) * (gj - mu) * pij;
        }
    }
    // Symmetric matrix: both marginals share mean and variance.
    let correlation = if var > 1e-15 { cov / var } else { 1.0 };
    Ok(GlcmFeatures {
        contrast,
        correlation,
        energy,
        homogeneity,
        entropy: entropy.max(0.0),
        dissimilarity,
    })
}
