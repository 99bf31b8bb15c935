use super::mask::RoiMask;
use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Gray levels `1..=n_levels` for masked pixels, `0` elsewhere, in the
/// frame's row-major layout so neighborhood queries stay positional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedRegion {
    width: usize,
    height: usize,
    n_levels: usize,
    levels: Vec<u16>,
}

impl QuantizedRegion {
    /// Builds a region directly from levels (`0` = outside the mask).
    pub fn from_levels(
        width: usize,
        height: usize,
        n_levels: usize,
        levels: Vec<u16>,
    ) -> Result<Self> {
        if levels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} region needs {} levels, got {}",
                width * height,
                levels.len()
            )));
        }
        if let Some(&g) = levels.iter().find(|&&g| g as usize > n_levels) {
            return Err(Error::Validation(format!(
                "gray level {g} exceeds {n_levels}"
            )));
        }
        Ok(QuantizedRegion {
            width,
            height,
            n_levels,
            levels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn levels(&self) -> &[u16] {
        &self.levels
    }

    /// Level at `(row, col)`, or `None` outside the frame or the mask.
    pub fn level(&self, row: isize, col: isize) -> Option<u16> {
        if row < 0 || col < 0 || row >= self.height as isize || col >= self.width as isize {
            return None;
        }
        match self.levels[row as usize * self.width + col as usize] {
            0 => None,
            g => Some(g),
        }
    }

    pub fn masked_count(&self) -> usize {
        self.levels.iter().filter(|&&g| g != 0).count()
    }
}

/// Maps `v` in `[min, max]` to a bin in `1..=bins`.
///
/// The divisor is widened by a relative `1e-9` of the range so `max` lands in
/// the top bin; intensities derived from 8-bit data sit at least `1/(bins*255)`
/// from any bin edge, far above that perturbation.
pub(crate) fn bin_of(v: f64, min: f64, max: f64, bins: usize) -> u16 {
    let range = max - min;
    if range <= 0.0 {
        return 1;
    }
    let idx = (bins as f64 * (v - min) / (range * (1.0 + 1e-9))).floor() as usize;
    (idx.min(bins - 1) + 1) as u16
}

pub(crate) fn masked_values(img: &GrayImage, mask: &RoiMask) -> Result<Vec<f64>> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::Dimension(format!(
            "image is {}x{} but mask is {}x{}",
            img.width(),
            img.height(),
            mask.width(),
            mask.height()
        )));
    }
    let vals: Vec<f64> = img
        .pixels()
        .iter()
        .zip(mask.bits())
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect();
    if vals.is_empty() {
        return Err(Error::FeatureUndefined("mask selects no pixels".into()));
    }
    Ok(vals)
}

fn min_max(vals: &[f64]) -> (f64, f64) {
    vals.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Fixed-bin-count quantization over the masked `[min, max]` range.
pub fn quantize(img: &GrayImage, mask: &RoiMask, n_levels: usize) -> Result<QuantizedRegion> {
    if n_levels < 2 || n_levels > u16::MAX as usize {
        return Err(Error::Parameter(format!(
            "gray level count {n_levels} outside [2, 65535]"
        )));
    }
    let (min, max) = min_max(&masked_values(img, mask)?);
    let levels = img
        .pixels()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &m)| if m { bin_of(v, min, max, n_levels) } else { 0 })
        .collect();
    Ok(QuantizedRegion {
        width: img.width(),
        height: img.height(),
        n_levels,
        levels,
    })
}
