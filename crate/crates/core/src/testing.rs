//! Independent reference implementations used by the test and acceptance
//! suites. Nothing here shares code with the paths it checks.

pub mod gradcheck {
    /// Central finite differences of `f` at `x`.
    pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                probe[i] = x[i] + h;
                let up = f(&probe);
                probe[i] = x[i] - h;
                let down = f(&probe);
                probe[i] = x[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// `|a - b| / max(|a|, |b|, floor)`; the floor keeps vanishing gradients
    /// from turning rounding noise into large relative errors.
    pub fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
        assert_eq!(analytic.len(), numeric.len());
        analytic
            .iter()
            .zip(numeric)
            .map(|(&a, &n)| relative_error(a, n))
            .fold(0.0, f64::max)
    }
}

/// Brute-force texture statistics over a level grid (`0` = unmasked).
pub mod texture {
    /// Quantization of 8-bit intensities in exact integer arithmetic:
    /// `1 + floor(n (u - min) / (max - min))` with interior bin edges
    /// belonging to the lower bin.
    pub fn integer_levels(raw: &[u8], mask: &[bool], n_levels: usize) -> Vec<u16> {
        let inside: Vec<u8> = raw
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect();
        let lo = *inside.iter().min().unwrap() as usize;
        let hi = *inside.iter().max().unwrap() as usize;
        let range = hi - lo;
        raw.iter()
            .zip(mask)
            .map(|(&v, &m)| {
                if !m {
                    return 0;
                }
                let a = v as usize - lo;
                if a == 0 || range == 0 {
                    1
                } else {
                    (1 + (a * n_levels - 1) / range) as u16
                }
            })
            .collect()
    }

    fn masked_positions(levels: &[u16], width: usize) -> Vec<(isize, isize, u16)> {
        levels
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0)
            .map(|(i, &g)| ((i / width) as isize, (i % width) as isize, g))
            .collect()
    }

    /// Symmetric co-occurrence counts by comparing every ordered pair of
    /// masked pixels against the displacement.
    pub fn pair_counts(
        levels: &[u16],
        width: usize,
        n_levels: usize,
        offset: (isize, isize),
    ) -> Vec<u64> {
        let pts = masked_positions(levels, width);
        let mut m = vec![0u64; n_levels * n_levels];
        for &(r1, c1, g1) in &pts {
            for &(r2, c2, g2) in &pts {
                let d = (r2 - r1, c2 - c1);
                if d == offset || d == (-offset.0, -offset.1) {
                    m[(g1 as usize - 1) * n_levels + g2 as usize - 1] += 1;
                }
            }
        }
        m
    }

    /// `[contrast, correlation, energy, homogeneity, entropy, dissimilarity]`
    /// of the mean normalized matrix over the offsets that have pairs.
    pub fn haralick(
        levels: &[u16],
        width: usize,
        n_levels: usize,
        offsets: &[(isize, isize)],
    ) -> Option<[f64; 6]> {
        let mut p = vec![0.0; n_levels * n_levels];
        let mut used = 0.0;
        for &o in offsets {
            let m = pair_counts(levels, width, n_levels, o);
            let total: u64 = m.iter().sum();
            if total > 0 {
                used += 1.0;
                for (a, &c) in p.iter_mut().zip(&m) {
                    *a += c as f64 / total as f64;
                }
            }
        }
        if used == 0.0 {
            return None;
        }
        for a in &mut p {
            *a /= used;
        }
        let idx = |k: usize| ((k / n_levels + 1) as f64, (k % n_levels + 1) as f64);
        let mu_i: f64 = p.iter().enumerate().map(|(k, &v)| idx(k).0 * v).sum();
        let mu_j: f64 = p.iter().enumerate().map(|(k, &v)| idx(k).1 * v).sum();
        let var_i: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &v)| (idx(k).0 - mu_i).powi(2) * v)
            .sum();
        let var_j: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &v)| (idx(k).1 - mu_j).powi(2) * v)
            .sum();
        let cov: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &v)| (idx(k).0 - mu_i) * (idx(k).1 - mu_j) * v)
            .sum();
        let contrast = p
            .iter()
            .enumerate()
            .map(|(k, &v)| (idx(k).0 - idx(k).1).powi(2) * v)
            .sum();
        let correlation = if var_i * var_j > 1e-30 {
            cov / (var_i * var_j).sqrt()
        } else {
            1.0
        };
        let energy = p.iter().map(|v| v * v).sum();
        let homogeneity = p
            .iter()
            .enumerate()
            .map(|(k, &v)| v / (1.0 + (idx(k).0 - idx(k).1).powi(2)))
            .sum();
        let entropy = -p
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| v * v.log2())
            .sum::<f64>();
        let dissimilarity = p
            .iter()
            .enumerate()
            .map(|(k, &v)| (idx(k).0 - idx(k).1).abs() * v)
            .sum();
        Some([
            contrast,
            correlation,
            energy,
            homogeneity,
            entropy,
            dissimilarity,
        ])
    }

    /// Runs found by locating each run's first pixel (predecessor absent or
    /// different) and walking forward. Returns `(level, length)` pairs.
    pub fn scan_runs(
        levels: &[u16],
        width: usize,
        height: usize,
        step: (isize, isize),
    ) -> Vec<(u16, usize)> {
        let at = |r: isize, c: isize| -> u16 {
            if r < 0 || c < 0 || r >= height as isize || c >= width as isize {
                0
            } else {
                levels[r as usize * width + c as usize]
            }
        };
        let mut runs = Vec::new();
        for (r, c, g) in masked_positions(levels, width) {
            if at(r - step.0, c - step.1) == g {
                continue;
            }
            let mut len = 1;
            while at(r + step.0 * len as isize, c + step.1 * len as isize) == g {
                len += 1;
            }
            runs.push((g, len));
        }
        runs
    }

    /// `[sre, lre, gln, rln, rp]` averaged over `steps`.
    pub fn galloway(
        levels: &[u16],
        width: usize,
        height: usize,
        n_levels: usize,
        steps: &[(isize, isize)],
    ) -> [f64; 5] {
        let np = levels.iter().filter(|&&g| g != 0).count() as f64;
        let mut acc = [0.0; 5];
        for &s in steps {
            let runs = scan_runs(levels, width, height, s);
            let nr = runs.len() as f64;
            let sre: f64 = runs.iter().map(|&(_, l)| 1.0 / (l * l) as f64).sum();
            let lre: f64 = runs.iter().map(|&(_, l)| (l * l) as f64).sum();
            let gln: f64 = (1..=n_levels as u16)
                .map(|g| (runs.iter().filter(|r| r.0 == g).count() as f64).powi(2))
                .sum();
            let max_len = runs.iter().map(|r| r.1).max().unwrap_or(0);
            let rln: f64 = (1..=max_len)
                .map(|l| (runs.iter().filter(|r| r.1 == l).count() as f64).powi(2))
                .sum();
            for (a, v) in acc
                .iter_mut()
                .zip([sre / nr, lre / nr, gln / nr, rln / nr, nr / np])
            {
                *a += v;
            }
        }
        acc.map(|v| v / steps.len() as f64)
    }

    /// 8-connected same-level zones via union-find; `(level, size)` sorted.
    pub fn union_find_zones(levels: &[u16], width: usize, height: usize) -> Vec<(u16, usize)> {
        let n = levels.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for i in 0..n {
            if levels[i] == 0 {
                continue;
            }
            let (r, c) = ((i / width) as isize, (i % width) as isize);
            for (dr, dc) in [(0, 1), (1, -1), (1, 0), (1, 1)] {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
                    continue;
                }
                let j = nr as usize * width + nc as usize;
                if levels[j] == levels[i] {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut sizes = std::collections::BTreeMap::new();
        for (i, &g) in levels.iter().enumerate().take(n) {
            if g != 0 {
                let root = find(&mut parent, i);
                sizes.entry(root).or_insert((g, 0)).1 += 1;
            }
        }
        let mut zones: Vec<(u16, usize)> = sizes.into_values().collect();
        zones.sort_unstable();
        zones
    }

    /// `[sae, lae, gln, zsn, zp]`.
    pub fn thibault(levels: &[u16], width: usize, height: usize, n_levels: usize) -> [f64; 5] {
        let zones = union_find_zones(levels, width, height);
        let np = levels.iter().filter(|&&g| g != 0).count() as f64;
        let nz = zones.len() as f64;
        let sae: f64 = zones.iter().map(|&(_, s)| 1.0 / (s * s) as f64).sum();
        let lae: f64 = zones.iter().map(|&(_, s)| (s * s) as f64).sum();
        let gln: f64 = (1..=n_levels as u16)
            .map(|g| (zones.iter().filter(|z| z.0 == g).count() as f64).powi(2))
            .sum();
        let zsn: f64 = (1..=levels.len())
            .map(|s| (zones.iter().filter(|z| z.1 == s).count() as f64).powi(2))
            .sum();
        [sae / nz, lae / nz, gln / nz, zsn / nz, nz / np]
    }
}

pub mod ranking {
    /// Pairwise Mann-Whitney statistic: the fraction of (positive, negative)
    /// pairs ranked correctly, ties counted one half.
    pub fn mann_whitney_auc(scores: &[f64], positive: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if !positive[i] {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if positive[j] {
                    continue;
                }
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    /// `(fpr, tpr)` of the rule `score >= t` for every distinct score `t`
    /// (descending) plus the empty rule, by direct counting.
    pub fn threshold_points(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let p = positive.iter().filter(|&&b| b).count() as f64;
        let n = positive.len() as f64 - p;
        let mut out = vec![(0.0, 0.0)];
        for t in thresholds {
            let tp = scores
                .iter()
                .zip(positive)
                .filter(|(&s, &b)| b && s >= t)
                .count() as f64;
            let fp = scores
                .iter()
                .zip(positive)
                .filter(|(&s, &b)| !b && s >= t)
                .count() as f64;
            out.push((fp / n, tp / p));
        }
        out
    }
}

pub mod adam {
    /// Textbook Adam on one scalar with L2 folded into the gradient.
    pub struct ScalarAdam {
        pub lr: f64,
        pub beta1: f64,
        pub beta2: f64,
        pub eps: f64,
        pub weight_decay: f64,
        m: f64,
        v: f64,
        t: i32,
    }

    impl ScalarAdam {
        pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
            ScalarAdam {
                lr,
                beta1,
                beta2,
                eps,
                weight_decay,
                m: 0.0,
                v: 0.0,
                t: 0,
            }
        }

        pub fn step(&mut self, w: f64, g: f64) -> f64 {
            let g = g + self.weight_decay * w;
            self.t += 1;
            self.m = self.beta1 * self.m + (1.0 - self.beta1) * g;
            self.v = self.beta2 * self.v + (1.0 - self.beta2) * g * g;
            let m_hat = self.m / (1.0 - self.beta1.powi(self.t));
            let v_hat = self.v / (1.0 - self.beta2.powi(self.t));
            w - self.lr * m_hat / (v_hat.sqrt() + self.eps)
        }
    }
}

pub mod data {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::dataset::{
        default_class_names, Dataset, DatasetManifest, FeatureTable, ManifestEntry,
    };

    /// In-memory dataset whose images carry a class-dependent horizontal
    /// stripe period and whose features are noisy one-hot class codes.
    pub fn separable(
        classes: usize,
        per_class: usize,
        side: usize,
        n_features: usize,
        seed: u64,
    ) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut images = Vec::new();
        let mut values = Vec::new();
        for i in 0..per_class {
            for k in 0..classes {
                let id = format!("img_{k}_{i}");
                entries.push(ManifestEntry {
                    path: id.clone().into(),
                    id,
                    label: k,
                });
                let period = 2 + k;
                let phase = rng.gen_range(0..period);
                let mut img = vec![0.0; 3 * side * side];
                for c in 0..3 {
                    for y in 0..side {
                        for x in 0..side {
                            let on = (x + phase) % period == 0;
                            img[(c * side + y) * side + x] =
                                if on { 0.9 } else { 0.1 } + rng.gen_range(-0.05..0.05);
                        }
                    }
                }
                images.push(img);
                for j in 0..n_features {
                    let code = if j % classes == k { 1.0 } else { 0.0 };
                    values.push(code + rng.gen_range(-0.3..0.3));
                }
            }
        }
        let manifest = DatasetManifest {
            entries,
            class_names: default_class_names(classes),
        };
        let columns = (0..n_features).map(|j| format!("f{j}")).collect();
        let table =
            FeatureTable::new(manifest.ids(), columns, values, Some(manifest.labels())).unwrap();
        Dataset::from_images(&manifest, &table, side, images).unwrap()
    }
}
