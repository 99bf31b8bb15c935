use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::manifest::write_manifest;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub side: usize,
    pub seed: u64,
}

/// Renders one image as interleaved RGB bytes. Class `k` sets the stripe
/// frequency of the periphery and the blob density of the center disk;
/// orientation, phase, blob placement, tint and noise are nuisance.
pub fn render_image(class: usize, side: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let s = side as f64;
    let c = (s - 1.0) / 2.0;
    let radius = 0.25 * s;

    let freq = 2.0 + 2.5 * class as f64;
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let (ca, sa) = (angle.cos(), angle.sin());

    let n_blobs = 1 + 3 * class;
    let blob_sigma = (s / 28.0).max(0.8);
    let blobs: Vec<(f64, f64)> = (0..n_blobs)
        .map(|_| {
            let r = radius * rng.gen_range(0.0f64..1.0).sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            (c + r * t.sin(), c + r * t.cos())
        })
        .collect();

    let tint = [1.0, rng.gen_range(0.75..0.95), rng.gen_range(0.55..0.8)];
    let brightness = rng.gen_range(0.85..1.1);
    let noise = Normal::new(0.0, 0.03).expect("valid noise scale");

    let mut out = Vec::with_capacity(side * side * 3);
    for y in 0..side {
        for x in 0..side {
            let (fy, fx) = (y as f64, x as f64);
            let inside = (fy - c).powi(2) + (fx - c).powi(2) <= radius * radius;
            let v = if inside {
                let bump: f64 = blobs
                    .iter()
                    .map(|&(by, bx)| {
                        let d2 = (fy - by).powi(2) + (fx - bx).powi(2);
                        (-d2 / (2.0 * blob_sigma * blob_sigma)).exp()
                    })
                    .sum();
                0.25 + 0.6 * bump.min(1.2)
            } else {
                let u = (fx * ca + fy * sa) / s;
                0.5 + 0.3 * (std::f64::consts::TAU * freq * u + phase).sin()
            };
            let v = v * brightness + noise.sample(rng);
            for t in tint {
                out.push(((v * t).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    out
}

/// Writes `images/c{k}_{i:04}.png` and `manifest.csv` under `out_dir`;
/// returns the manifest path. Output depends only on `spec`.
pub fn synthesize_dataset(spec: SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    if spec.classes < 2 || spec.per_class == 0 || spec.side < 8 {
        return Err(Error::Parameter(format!(
            "synthetic dataset needs >=2 classes, >=1 image per class and side >=8, got {spec:?}"
        )));
    }
    let img_dir = out_dir.join("images");
    std::fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;

    let jobs: Vec<(usize, usize)> = (0..spec.per_class)
        .flat_map(|i| (0..spec.classes).map(move |k| (i, k)))
        .collect();
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(n, &(i, k))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(n as u64);
            let bytes = render_image(k, spec.side, &mut rng);
            let rel = format!("images/c{k}_{i:04}.png");
            let path = out_dir.join(&rel);
            image::save_buffer(
                &path,
                &bytes,
                spec.side as u32,
                spec.side as u32,
                image::ExtendedColorType::Rgb8,
            )
            .map_err(|e| Error::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
            Ok((rel, k))
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = out_dir.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    Ok(manifest)
}
