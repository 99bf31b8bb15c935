use crate::error::{Error, Result};

/// Smallest region the texture statistics are computed over.
pub const MIN_ROI_PIXELS: usize = 16;

/// Binary region of interest; `true` marks a participating pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} mask needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(RoiMask {
            width,
            height,
            bits,
        })
    }

    /// Disk centred at `((H-1)/2, (W-1)/2)` with radius
    /// `radius_fraction * min(W, H) / 2`, boundary inclusive. No minimum size
    /// is enforced here; see [`make_central_mask`].
    pub fn disk(width: usize, height: usize, radius_fraction: f64) -> Result<Self> {
        if width < 8 || height < 8 {
            return Err(Error::Parameter(format!(
                "mask frame must be at least 8x8, got {width}x{height}"
            )));
        }
        if !(radius_fraction > 0.0 && radius_fraction <= 1.0) {
            return Err(Error::Parameter(format!(
                "radius fraction {radius_fraction} outside (0, 1]"
            )));
        }
        let cr = (height as f64 - 1.0) / 2.0;
        let cc = (width as f64 - 1.0) / 2.0;
        let radius = radius_fraction * width.min(height) as f64 / 2.0;
        let r2 = radius * radius;
        let bits = (0..height)
            .flat_map(|r| {
                (0..width).map(move |c| {
                    let (dr, dc) = (r as f64 - cr, c as f64 - cc);
                    dr * dr + dc * dc <= r2
                })
            })
            .collect();
        Ok(RoiMask {
            width,
            height,
            bits,
        })
    }

    pub fn complement(&self) -> RoiMask {
        RoiMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn require_min(self) -> Result<Self> {
        let pixels = self.count();
        if pixels < MIN_ROI_PIXELS {
            return Err(Error::RegionTooSmall {
                pixels,
                min: MIN_ROI_PIXELS,
            });
        }
        Ok(self)
    }
}

/// Central disk region of interest.
pub fn make_central_mask(width: usize, height: usize, radius_fraction: f64) -> Result<RoiMask> {
    RoiMask::disk(width, height, radius_fraction)?.require_min()
}

/// Everything outside the central disk: the exact complement of
/// [`make_central_mask`] under the same parameters.
pub fn make_peripheral_mask(width: usize, height: usize, radius_fraction: f64) -> Result<RoiMask> {
    RoiMask::disk(width, height, radius_fraction)?
        .complement()
        .require_min()
}
