use super::mask::RoiMask;
use super::quantize::{bin_of, masked_values};
use crate::error::Result;
use crate::raster::GrayImage;

/// Histogram resolution of the first-order entropy.
pub const ENTROPY_BINS: usize = 32;

pub const FIRST_ORDER_NAMES: [&str; 10] = [
    "mean", "variance", "skewness", "kurtosis", "energy", "entropy", "min", "max", "median",
    "range",
];

/// Intensity statistics of the masked pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderFeatures {
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub skewness: f64,
    /// Excess (Fisher) kurtosis.
    pub kurtosis: f64,
    /// Sum of squared intensities.
    pub energy: f64,
    /// Base-2 entropy of a 32-bin histogram over the masked range.
    pub entropy: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub range: f64,
}

impl FirstOrderFeatures {
    /// Values in [`FIRST_ORDER_NAMES`] order.
    pub fn values(&self) -> [f64; 10] {
        [
            self.mean,
            self.variance,
            self.skewness,
            self.kurtosis,
            self.energy,
            self.entropy,
            self.min,
            self.max,
            self.median,
            self.range,
        ]
    }
}

/// Skewness and kurtosis of a constant region are reported as 0.
pub fn first_order_features(img: &GrayImage, mask: &RoiMask) -> Result<FirstOrderFeatures> {
    let mut vals = masked_values(img, mask)?;
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in &vals {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    let energy = vals.iter().map(|v| v * v).sum();

    vals.sort_by(f64::total_cmp);
    let (min, max) = (vals[0], vals[vals.len() - 1]);
    let mid = vals.len() / 2;
    let median = if vals.len() % 2 == 0 {
        0.5 * (vals[mid - 1] + vals[mid])
    } else {
        vals[mid]
    };

    let mut hist = [0usize; ENTROPY_BINS];
    for &v in &vals {
        hist[bin_of(v, min, max, ENTROPY_BINS) as usize - 1] += 1;
    }
    let entropy = -hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();

    Ok(FirstOrderFeatures {
        mean,
        variance: m2,
        skewness,
        kurtosis,
        energy,
        entropy: entropy.max(0.0),
        min,
        max,
        median,
        range: max - min,
    })
}
