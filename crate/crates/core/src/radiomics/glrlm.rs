//! Gray-level run-length matrix and Galloway descriptors.

use super::glcm::Direction;
use super::quantize::QuantizedRegion;
use crate::error::{Error, Result};

pub const GLRLM_NAMES: [&str; 5] = [
    "short_run_emphasis",
    "long_run_emphasis",
    "gray_level_nonuniformity",
    "run_length_nonuniformity",
    "run_percentage",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GlrlmFeatures {
    pub short_run_emphasis: f64,
    pub long_run_emphasis: f64,
    pub gray_level_nonuniformity: f64,
    pub run_length_nonuniformity: f64,
    pub run_percentage: f64,
}

impl GlrlmFeatures {
    pub fn values(&self) -> [f64; 5] {
        [
            self.short_run_emphasis,
            self.long_run_emphasis,
            self.gray_level_nonuniformity,
            self.run_length_nonuniformity,
            self.run_percentage,
        ]
    }
}

/// Run counts indexed `[level - 1][length - 1]`, flattened with
/// `max(width, height)` columns. A run ends at a level change, an unmasked
/// pixel or the frame edge.
pub fn run_length_matrix(q: &QuantizedRegion, dir: Direction) -> Vec<u64> {
    let (w, h) = (q.width() as isize, q.height() as isize);
    let max_len = q.width().max(q.height());
    let mut runs = vec![0u64; q.n_levels() * max_len];
    let (dr, dc) = dir.offset();

    // Every line along `dir` starts at a pixel whose predecessor is off-frame.
    let starts = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| {
            let (pr, pc) = (r - dr, c - dc);
            pr < 0 || pc < 0 || pr >= h || pc >= w
        });
    for (r0, c0) in starts {
        let (mut r, mut c) = (r0, c0);
        let mut current: Option<(u16, usize)> = None;
        while r >= 0 && c >= 0 && r < h && c < w {
            let level = q.level(r, c);
            current = match (current, level) {
                (Some((g, len)), Some(l)) if g == l => Some((g, len + 1)),
                (prev, next) => {
                    if let Some((g, len)) = prev {
                        runs[(g as usize - 1) * max_len + len - 1] += 1;
                    }
                    next.map(|l| (l, 1))
                }
            };
            r += dr;
            c += dc;
        }
        if let Some((g, len)) = current {
            runs[(g as usize - 1) * max_len + len - 1] += 1;
        }
    }
    runs
}

/// Per-direction Galloway descriptors averaged over `dirs`.
pub fn glrlm_features(q: &QuantizedRegion, dirs: &[Direction]) -> Result<GlrlmFeatures> {
    let np = q.masked_count();
    if np == 0 || dirs.is_empty() {
        return Err(Error::FeatureUndefined(
            "run-length matrix of an empty region".into(),
        ));
    }
    let ng = q.n_levels();
    let max_len = q.width().max(q.height());
    let mut sum = [0.0; 5];
    for &d in dirs {
        let runs = run_length_matrix(q, d);
        let nr: u64 = runs.iter().sum();
        let nr = nr as f64;
        let (mut sre, mut lre) = (0.0, 0.0);
        let mut by_len = vec![0.0; max_len];
        let mut gln = 0.0;
        for g in 0..ng {
            let row = &runs[g * max_len..(g + 1) * max_len];
            let mut per_level = 0.0;
            for (j, &count) in row.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let (count, len) = (count as f64, (j + 1) as f64);
                sre += count / (len * len);
                lre += count * len * len;
                per_level += count;
                by_len[j] += count;
            }
            gln += per_level * per_level;
        }
        let rln: f64 = by_len.iter().map(|c| c * c).sum();
        sum[0] += sre / nr;
        sum[1] += lre / nr;
        sum[2] += gln / nr;
        sum[3] += rln / nr;
        sum[4] += nr / np as f64;
    }
    let k = dirs.len() as f64;
    Ok(GlrlmFeatures {
        short_run_emphasis: sum[0] / k,
        long_run_emphasis: sum[1] / k,
        gray_level_nonuniformity: sum[2] / k,
        run_length_nonuniformity: sum[3] / k,
        run_percentage: sum[4] / k,
    })
}
