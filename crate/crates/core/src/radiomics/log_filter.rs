//! Laplacian-of-Gaussian band-pass filtering.

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// The two filter scales, in pixels.
pub const LOG_SIGMAS: [f64; 2] = [1.0, 2.0];

/// Zero-sum LoG kernel of half-width `ceil(3 sigma)`, row-major, side `2r + 1`.
pub fn log_kernel(sigma: f64) -> (usize, Vec<f64>) {
    let r = (3.0 * sigma).ceil() as isize;
    let s2 = sigma * sigma;
    let norm = -1.0 / (std::f64::consts::PI * s2 * s2);
    let mut k: Vec<f64> = (-r..=r)
        .flat_map(|y| {
            (-r..=r).map(move |x| {
                let q = (x * x + y * y) as f64 / (2.0 * s2);
                norm * (1.0 - q) * (-q).exp()
            })
        })
        .collect();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter_mut().for_each(|v| *v -= mean);
    (r as usize, k)
}

/// Mirror index without repeating the edge sample (`d c b | a b c d | c b a`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Filters `img` with the LoG kernel at `sigma` (one of [`LOG_SIGMAS`]),
/// reflecting at the borders.
pub fn log_filter(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !LOG_SIGMAS.contains(&sigma) {
        return Err(Error::Parameter(format!(
            "LoG sigma {sigma} is not one of {LOG_SIGMAS:?}"
        )));
    }
    let (r, k) = log_kernel(sigma);
    let side = 2 * r + 1;
    let (w, h) = (img.width(), img.height());
    let src = img.pixels();
    let col_idx: Vec<Vec<usize>> = (0..w)
        .map(|c| {
            (0..side)
                .map(|kx| reflect(c as isize + kx as isize - r as isize, w))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        for ky in 0..side {
            let sr = reflect(row as isize + ky as isize - r as isize, h);
            let src_row = &src[sr * w..(sr + 1) * w];
            let krow = &k[ky * side..(ky + 1) * side];
            for (c, idx) in col_idx.iter().enumerate() {
                let mut acc = 0.0;
                for (kv, &sc) in krow.iter().zip(idx) {
                    acc += kv * src_row[sc];
                }
                out[row * w + c] += acc;
            }
        }
    }
    GrayImage::new(w, h, out)
}
