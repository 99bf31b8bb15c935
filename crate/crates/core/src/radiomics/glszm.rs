//! Gray-level size-zone matrix (8-connected zones) and Thibault descriptors.

use super::quantize::QuantizedRegion;
use crate::error::{Error, Result};

pub const GLSZM_NAMES: [&str; 5] = [
    "small_area_emphasis",
    "large_area_emphasis",
    "gray_level_nonuniformity",
    "zone_size_nonuniformity",
    "zone_percentage",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GlszmFeatures {
    pub small_area_emphasis: f64,
    pub large_area_emphasis: f64,
    pub gray_level_nonuniformity: f64,
    pub zone_size_nonuniformity: f64,
    pub zone_percentage: f64,
}

impl GlszmFeatures {
    pub fn values(&self) -> [f64; 5] {
        [
            self.small_area_emphasis,
            self.large_area_emphasis,
            self.gray_level_nonuniformity,
            self.zone_size_nonuniformity,
            self.zone_percentage,
        ]
    }
}

/// `(level, size)` of every 8-connected same-level zone, in scan order of
/// each zone's first pixel.
pub fn zones(q: &QuantizedRegion) -> Vec<(u16, usize)> {
    let (w, h) = (q.width(), q.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        let level = q.levels()[start];
        if level == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if q.level(r + dr, c + dc) == Some(level) {
                        let np = (r + dr) as usize * w + (c + dc) as usize;
                        if !seen[np] {
                            seen[np] = true;
                            stack.push(np);
                        }
                    }
                }
            }
        }
        out.push((level, size));
    }
    out
}

pub fn glszm_features(q: &QuantizedRegion) -> Result<GlszmFeatures> {
    let zs = zones(q);
    let np = q.masked_count();
    if zs.is_empty() {
        return Err(Error::FeatureUndefined(
            "size-zone matrix of an empty region".into(),
        ));
    }
    let nz = zs.len() as f64;
    let mut per_level = vec![0.0; q.n_levels()];
    let mut per_size = vec![0.0; np + 1];
    let (mut sae, mut lae) = (0.0, 0.0);
    for &(g, s) in &zs {
        let s_f = s as f64;
        sae += 1.0 / (s_f * s_f);
        lae += s_f * s_f;
        per_level[g as usize - 1] += 1.0;
        per_size[s] += 1.0;
    }
    Ok(GlszmFeatures {
        small_area_emphasis: sae / nz,
        large_area_emphasis: lae / nz,
        gray_level_nonuniformity: per_level.iter().map(|c| c * c).sum::<f64>() / nz,
        zone_size_nonuniformity: per_size.iter().map(|c| c * c).sum::<f64>() / nz,
        zone_percentage: nz / np as f64,
    })
}
