//! Forward operations and their reverse-mode rules.

use rand::Rng;
use rayon::prelude::*;

use super::kernels::{
    col2im_3x3_rows, gemm, gemm_strided, im2col_3x3_rows, row_bands, row_major, transposed,
};
use super::tape::{accumulate, Mode, Op, Tape, Var};
use super::Tensor;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Running per-channel statistics of a batch-norm layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BnRunning {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BnRunning {
    pub fn new(channels: usize) -> Self {
        BnRunning {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
        }
    }
}

impl Tape {
    /// `out[n, j] = sum_i w[j, i] * x[n, i] + b[j]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (n, d_in) = self.value(x).dims2()?;
        let (d_out, w_in) = self.value(w).dims2()?;
        if w_in != d_in || self.shape(b) != [d_out] {
            return Err(Error::Dimension(format!(
                "affine input {:?} against weight {:?} and bias {:?}",
                self.shape(x),
                self.shape(w),
                self.shape(b)
            )));
        }
        let mut out = vec![0.0; n * d_out];
        for row in out.chunks_mut(d_out.max(1)) {
            row.copy_from_slice(self.value(b).data());
        }
        gemm(
            n,
            d_in,
            d_out,
            self.value(x).data(),
            false,
            self.value(w).data(),
            true,
            1.0,
            &mut out,
        );
        let rg = self.any_grad(&[x, w, b]);
        Ok(self.push(
            Tensor::new(vec![n, d_out], out)?,
            rg,
            Op::Affine { x, w, b },
        ))
    }

    /// 3x3 cross-correlation, stride 1, zero padding 1.
    pub fn conv2d(&mut self, x: Var, k: Var, b: Var) -> Result<Var> {
        let (n, c, h, w) = self.value(x).dims4()?;
        let (co, kc, kh, kw) = self.value(k).dims4()?;
        if kc != c || kh != 3 || kw != 3 || self.shape(b) != [co] {
            return Err(Error::Dimension(format!(
                "conv2d input {:?} against kernel {:?} and bias {:?}",
                self.shape(x),
                self.shape(k),
                self.shape(b)
            )));
        }
        let hw = h * w;
        let xs = self.value(x).data();
        let ks = self.value(k).data();
        let bs = self.value(b).data();
        let mut out = vec![0.0; n * co * hw];
        out.par_chunks_mut(co * hw)
            .zip(xs.par_chunks(c * hw))
            .for_each_init(Vec::new, |cols, (dst, img)| {
                for (plane, &bias) in dst.chunks_mut(hw).zip(bs) {
                    plane.fill(bias);
                }
                // Spatial positions as rows keep the long dimension in the GEMM's m.
                for rows in row_bands(c, h, w) {
                    let len = rows.len() * w;
                    let y0 = rows.start * w;
                    cols.resize(c * 9 * len, 0.0);
                    im2col_3x3_rows(img, c, h, w, rows, cols);
                    gemm_strided(
                        len,
                        c * 9,
                        co,
                        cols,
                        transposed(len),
                        ks,
                        transposed(c * 9),
                        1.0,
                        &mut dst[y0..],
                        transposed(hw),
                    );
                }
            });
        let rg = self.any_grad(&[x, k, b]);
        Ok(self.push(
            Tensor::new(vec![n, co, h, w], out)?,
            rg,
            Op::Conv3x3 { x, k, b },
        ))
    }

    /// 1x1 convolution: the same affine map `k: [C_out, C]` applied at every pixel.
    pub fn pointwise_conv(&mut self, x: Var, k: Var, b: Var) -> Result<Var> {
        let (n, c, h, w) = self.value(x).dims4()?;
        let (co, kc) = self.value(k).dims2()?;
        if kc != c || self.shape(b) != [co] {
            return Err(Error::Dimension(format!(
                "pointwise conv input {:?} against kernel {:?} and bias {:?}",
                self.shape(x),
                self.shape(k),
                self.shape(b)
            )));
        }
        let hw = h * w;
        let xs = self.value(x).data();
        let ks = self.value(k).data();
        let bs = self.value(b).data();
        let mut out = vec![0.0; n * co * hw];
        out.par_chunks_mut(co * hw)
            .zip(xs.par_chunks(c * hw))
            .for_each(|(dst, img)| {
                for (plane, &bias) in dst.chunks_mut(hw).zip(bs) {
                    plane.fill(bias);
                }
                gemm_strided(
                    hw,
                    c,
                    co,
                    img,
                    transposed(hw),
                    ks,
                    transposed(c),
                    1.0,
                    dst,
                    transposed(hw),
                );
            });
        let rg = self.any_grad(&[x, k, b]);
        Ok(self.push(
            Tensor::new(vec![n, co, h, w], out)?,
            rg,
            Op::Pointwise { x, k, b },
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let out = Tensor::from_fn(v.shape(), |i| v.data()[i].max(0.0));
        let rg = self.any_grad(&[x]);
        self.push(out, rg, Op::Relu { x })
    }

    /// Per-channel batch normalization over `N,C` or `N,C,H,W` inputs.
    ///
    /// Train mode normalizes with the biased batch variance and folds the
    /// batch statistics into `running` with momentum [`BN_MOMENTUM`].
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running: &mut BnRunning,
        mode: Mode,
    ) -> Result<Var> {
        let (n, c, s) = self.value(x).channel_view()?;
        if self.shape(gamma) != [c] || self.shape(beta) != [c] || running.mean.len() != c {
            return Err(Error::Dimension(format!(
                "batch_norm input {:?} against gamma {:?}, beta {:?}, {} running channels",
                self.shape(x),
                self.shape(gamma),
                self.shape(beta),
                running.mean.len()
            )));
        }
        let xs = self.value(x).data();
        let g = self.value(gamma).data();
        let bt = self.value(beta).data();
        let m = (n * s) as f64;
        let mut xhat = vec![0.0; xs.len()];
        let mut out = vec![0.0; xs.len()];
        let mut inv_std = vec![0.0; c];
        let train = mode == Mode::Train;
        if train && n < 2 {
            return Err(Error::Parameter(format!(
                "batch_norm in train mode needs a batch of at least 2, got {n}"
            )));
        }
        for ch in 0..c {
            let planes = (0..n).map(|i| (i * c + ch) * s..(i * c + ch + 1) * s);
            let (mean, var) = if train {
                let mean = planes.clone().flat_map(|r| &xs[r]).sum::<f64>() / m;
                let var = planes
                    .clone()
                    .flat_map(|r| &xs[r])
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / m;
                running.mean[ch] = (1.0 - BN_MOMENTUM) * running.mean[ch] + BN_MOMENTUM * mean;
                running.var[ch] = (1.0 - BN_MOMENTUM) * running.var[ch] + BN_MOMENTUM * var;
                (mean, var)
            } else {
                (running.mean[ch], running.var[ch])
            };
            let is = 1.0 / (var + BN_EPS).sqrt();
            inv_std[ch] = is;
            for r in planes {
                for i in r {
                    let xh = (xs[i] - mean) * is;
                    xhat[i] = xh;
                    out[i] = g[ch] * xh + bt[ch];
                }
            }
        }
        let shape = self.shape(x).to_vec();
        let rg = self.any_grad(&[x, gamma, beta]);
        let (xhat, inv_std) = if rg {
            (xhat, inv_std)
        } else {
            (Vec::new(), Vec::new())
        };
        let op = if train {
            Op::BatchNormTrain {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            }
        } else {
            Op::BatchNormEval {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            }
        };
        Ok(self.push(Tensor::new(shape, out)?, rg, op))
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - p)`; eval mode is identity.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        p: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Parameter(format!(
                "dropout probability {p} outside [0, 1)"
            )));
        }
        let v = self.value(x);
        let mask: Vec<f64> = if mode == Mode::Eval || p == 0.0 {
            vec![1.0; v.numel()]
        } else {
            let scale = 1.0 / (1.0 - p);
            (0..v.numel())
                .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
                .collect()
        };
        let out = Tensor::from_fn(v.shape(), |i| v.data()[i] * mask[i]);
        let rg = self.any_grad(&[x]);
        Ok(self.push(out, rg, Op::Dropout { x, mask }))
    }

    /// Concatenates along the channel axis (axis 1) of `N,C` or `N,C,H,W` inputs.
    pub fn concat_channels(&mut self, xs: &[Var]) -> Result<Var> {
        let first = *xs
            .first()
            .ok_or_else(|| Error::Dimension("concat_channels needs at least one input".into()))?;
        let (n, _, s) = self.value(first).channel_view()?;
        let rank = self.shape(first).len();
        let mut channels = Vec::with_capacity(xs.len());
        for &v in xs {
            let (vn, vc, vs) = self.value(v).channel_view()?;
            let same_spatial =
                self.shape(v).len() == rank && self.shape(v)[2..] == self.shape(first)[2..];
            if vn != n || vs != s || !same_spatial {
                return Err(Error::Dimension(format!(
                    "concat_channels mixes shapes {:?} and {:?}",
                    self.shape(first),
                    self.shape(v)
                )));
            }
            channels.push(vc);
        }
        let total: usize = channels.iter().sum();
        let mut out = Vec::with_capacity(n * total * s);
        for i in 0..n {
            for (&v, &c) in xs.iter().zip(&channels) {
                out.extend_from_slice(&self.value(v).data()[i * c * s..(i + 1) * c * s]);
            }
        }
        let mut shape = self.shape(first).to_vec();
        shape[1] = total;
        let rg = self.any_grad(xs);
        Ok(self.push(
            Tensor::new(shape, out)?,
            rg,
            Op::Concat {
                xs: xs.to_vec(),
                channels,
            },
        ))
    }

    /// Per-channel spatial mean: `N,C,H,W -> N,C`.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let (n, c, h, w) = self.value(x).dims4()?;
        let hw = h * w;
        let out: Vec<f64> = self
            .value(x)
            .data()
            .chunks(hw)
            .map(|p| p.iter().sum::<f64>() / hw as f64)
            .collect();
        let rg = self.any_grad(&[x]);
        Ok(self.push(Tensor::new(vec![n, c], out)?, rg, Op::GlobalAvgPool { x }))
    }

    /// Non-overlapping 2x2 mean pooling; a trailing odd row or column is
    /// averaged over the pixels that exist.
    pub fn avg_pool_2x2(&mut self, x: Var) -> Result<Var> {
        let (n, c, h, w) = self.value(x).dims4()?;
        if h < 2 || w < 2 {
            return Err(Error::Dimension(format!(
                "avg_pool_2x2 needs H, W >= 2, got {:?}",
                self.shape(x)
            )));
        }
        let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
        let xs = self.value(x).data();
        let mut out = vec![0.0; n * c * oh * ow];
        for (src, dst) in xs.chunks(h * w).zip(out.chunks_mut(oh * ow)) {
            for oy in 0..oh {
                for ox in 0..ow {
                    let (y1, x1) = ((2 * oy + 2).min(h), (2 * ox + 2).min(w));
                    let mut sum = 0.0;
                    for y in 2 * oy..y1 {
                        for xx in 2 * ox..x1 {
                            sum += src[y * w + xx];
                        }
                    }
                    dst[oy * ow + ox] = sum / ((y1 - 2 * oy) * (x1 - 2 * ox)) as f64;
                }
            }
        }
        let rg = self.any_grad(&[x]);
        Ok(self.push(
            Tensor::new(vec![n, c, oh, ow], out)?,
            rg,
            Op::AvgPool2x2 { x },
        ))
    }

    /// Mean over the batch of `-log softmax(logits)[label]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (n, c) = self.value(logits).dims2()?;
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {} logit rows",
                labels.len(),
                n
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= c) {
            return Err(Error::Validation(format!(
                "label {l} at row {i} outside [0, {c})"
            )));
        }
        let probs = super::softmax_rows(self.value(logits))?.into_data();
        let loss = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let row = &self.value(logits).data()[i * c..(i + 1) * c];
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - row[l]
            })
            .sum::<f64>()
            / n as f64;
        let rg = self.any_grad(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss),
            rg,
            Op::SoftmaxCrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.any_grad(&[x]);
        self.push(Tensor::scalar(s), rg, Op::Sum { x })
    }

    /// `sum_i weights[i] * x[i]` against constant weights.
    pub fn dot(&mut self, x: Var, weights: &Tensor) -> Result<Var> {
        if weights.numel() != self.value(x).numel() {
            return Err(Error::Dimension(format!(
                "dot of {:?} with {:?}",
                self.shape(x),
                weights.shape()
            )));
        }
        let s = self
            .value(x)
            .data()
            .iter()
            .zip(weights.data())
            .map(|(a, b)| a * b)
            .sum();
        let rg = self.any_grad(&[x]);
        Ok(self.push(
            Tensor::scalar(s),
            rg,
            Op::Dot {
                x,
                weights: weights.data().to_vec(),
            },
        ))
    }
}

pub(crate) fn backward_op(
    tape: &Tape,
    op: &Op,
    out: &Tensor,
    dy: &[f64],
    grads: &mut [Option<Vec<f64>>],
) {
    let val = |v: Var| tape.value(v);
    let needs = |v: Var| tape.requires_grad(v);
    match op {
        Op::Leaf => {}
        Op::Affine { x, w, b } => {
            let (n, d_in) = (val(*x).shape()[0], val(*x).shape()[1]);
            let d_out = val(*w).shape()[0];
            if needs(*x) {
                let mut dx = vec![0.0; n * d_in];
                gemm(
                    n,
                    d_out,
                    d_in,
                    dy,
                    false,
                    val(*w).data(),
                    false,
                    0.0,
                    &mut dx,
                );
                accumulate(grads, tape, *x, dx);
            }
            if needs(*w) {
                let mut dw = vec![0.0; d_out * d_in];
                gemm(
                    d_out,
                    n,
                    d_in,
                    dy,
                    true,
                    val(*x).data(),
                    false,
                    0.0,
                    &mut dw,
                );
                accumulate(grads, tape, *w, dw);
            }
            if needs(*b) {
                let mut db = vec![0.0; d_out];
                for row in dy.chunks(d_out.max(1)) {
                    for (a, g) in db.iter_mut().zip(row) {
                        *a += g;
                    }
                }
                accumulate(grads, tape, *b, db);
            }
        }
        Op::Conv3x3 { x, k, b } => {
            let (n, c, h, w) = val(*x).dims4().expect("conv input is rank 4");
            let co = val(*k).shape()[0];
            let hw = h * w;
            let xs = val(*x).data();
            let ks = val(*k).data();
            if needs(*x) {
                let mut dx = vec![0.0; n * c * hw];
                dx.par_chunks_mut(c * hw)
                    .zip(dy.par_chunks(co * hw))
                    .for_each_init(Vec::new, |dcols, (dst, g)| {
                        for rows in row_bands(c, h, w) {
                            let len = rows.len() * w;
                            let y0 = rows.start * w;
                            dcols.resize(c * 9 * len, 0.0);
                            gemm_strided(
                                len,
                                co,
                                c * 9,
                                &g[y0..],
                                transposed(hw),
                                ks,
                                row_major(c * 9),
                                0.0,
                                dcols,
                                transposed(len),
                            );
                            col2im_3x3_rows(dcols, c, h, w, rows, dst);
                        }
                    });
                accumulate(grads, tape, *x, dx);
            }
            if needs(*k) {
                let partials: Vec<Vec<f64>> = xs
                    .par_chunks(c * hw)
                    .zip(dy.par_chunks(co * hw))
                    .map_init(Vec::new, |cols, (img, g)| {
                        let mut dk = vec![0.0; co * c * 9];
                        for rows in row_bands(c, h, w) {
                            let len = rows.len() * w;
                            let y0 = rows.start * w;
                            cols.resize(c * 9 * len, 0.0);
                            im2col_3x3_rows(img, c, h, w, rows, cols);
                            gemm_strided(
                                c * 9,
                                len,
                                co,
                                cols,
                                row_major(len),
                                &g[y0..],
                                transposed(hw),
                                1.0,
                                &mut dk,
                                transposed(c * 9),
                            );
                        }
                        dk
                    })
                    .collect();
                accumulate(grads, tape, *k, sum_in_order(partials, co * c * 9));
            }
            if needs(*b) {
                accumulate(grads, tape, *b, channel_sums(dy, n, co, hw));
            }
        }
        Op::Pointwise { x, k, b } => {
            let (n, c, h, w) = val(*x).dims4().expect("pointwise input is rank 4");
            let co = val(*k).shape()[0];
            let hw = h * w;
            let xs = val(*x).data();
            let ks = val(*k).data();
            if needs(*x) {
                let mut dx = vec![0.0; n * c * hw];
                dx.par_chunks_mut(c * hw)
                    .zip(dy.par_chunks(co * hw))
                    .for_each(|(dst, g)| {
                        gemm_strided(
                            hw,
                            co,
                            c,
                            g,
                            transposed(hw),
                            ks,
                            row_major(c),
                            0.0,
                            dst,
                            transposed(hw),
                        )
                    });
                accumulate(grads, tape, *x, dx);
            }
            if needs(*k) {
                let partials: Vec<Vec<f64>> = xs
                    .par_chunks(c * hw)
                    .zip(dy.par_chunks(co * hw))
                    .map(|(img, g)| {
                        let mut dk = vec![0.0; co * c];
                        gemm_strided(
                            c,
                            hw,
                            co,
                            img,
                            row_major(hw),
                            g,
                            transposed(hw),
                            0.0,
                            &mut dk,
                            transposed(c),
                        );
                        dk
                    })
                    .collect();
                accumulate(grads, tape, *k, sum_in_order(partials, co * c));
            }
            if needs(*b) {
                accumulate(grads, tape, *b, channel_sums(dy, n, co, hw));
            }
        }
        Op::Relu { x } => {
            // Subgradient 0 at exactly 0.
            let dx: Vec<f64> = val(*x)
                .data()
                .iter()
                .zip(dy)
                .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                .collect();
            accumulate(grads, tape, *x, dx);
        }
        Op::BatchNormTrain {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
        } => {
            let (n, c, s) = out.channel_view().expect("batch_norm output shape");
            let g = val(*gamma).data();
            let m = (n * s) as f64;
            let mut dx = vec![0.0; dy.len()];
            let mut dgamma = vec![0.0; c];
            let mut dbeta = vec![0.0; c];
            for ch in 0..c {
                let planes = || (0..n).map(move |i| (i * c + ch) * s..(i * c + ch + 1) * s);
                let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
                for r in planes() {
                    for i in r {
                        sum_dy += dy[i];
                        sum_dy_xhat += dy[i] * xhat[i];
                    }
                }
                dgamma[ch] = sum_dy_xhat;
                dbeta[ch] = sum_dy;
                let scale = g[ch] * inv_std[ch] / m;
                for r in planes() {
                    for i in r {
                        dx[i] = scale * (m * dy[i] - sum_dy - xhat[i] * sum_dy_xhat);
                    }
                }
            }
            accumulate(grads, tape, *x, dx);
            accumulate(grads, tape, *gamma, dgamma);
            accumulate(grads, tape, *beta, dbeta);
        }
        Op::BatchNormEval {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
        } => {
            let (n, c, s) = out.channel_view().expect("batch_norm output shape");
            let g = val(*gamma).data();
            let mut dx = vec![0.0; dy.len()];
            let mut dgamma = vec![0.0; c];
            let mut dbeta = vec![0.0; c];
            for i in 0..n {
                for ch in 0..c {
                    for j in (i * c + ch) * s..(i * c + ch + 1) * s {
                        dx[j] = dy[j] * g[ch] * inv_std[ch];
                        dgamma[ch] += dy[j] * xhat[j];
                        dbeta[ch] += dy[j];
                    }
                }
            }
            accumulate(grads, tape, *x, dx);
            accumulate(grads, tape, *gamma, dgamma);
            accumulate(grads, tape, *beta, dbeta);
        }
        Op::Dropout { x, mask } => {
            let dx: Vec<f64> = dy.iter().zip(mask).map(|(g, m)| g * m).collect();
            accumulate(grads, tape, *x, dx);
        }
        Op::Concat { xs, channels } => {
            let (n, total, s) = out.channel_view().expect("concat output shape");
            let mut offset = 0;
            for (&v, &c) in xs.iter().zip(channels) {
                if needs(v) {
                    let mut dx = Vec::with_capacity(n * c * s);
                    for i in 0..n {
                        let start = (i * total + offset) * s;
                        dx.extend_from_slice(&dy[start..start + c * s]);
                    }
                    accumulate(grads, tape, v, dx);
                }
                offset += c;
            }
        }
        Op::GlobalAvgPool { x } => {
            let (_, _, h, w) = val(*x).dims4().expect("gap input is rank 4");
            let hw = h * w;
            let dx: Vec<f64> = dy
                .iter()
                .flat_map(|&g| std::iter::repeat_n(g / hw as f64, hw))
                .collect();
            accumulate(grads, tape, *x, dx);
        }
        Op::AvgPool2x2 { x } => {
            let (n, c, h, w) = val(*x).dims4().expect("pool input is rank 4");
            let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
            let mut dx = vec![0.0; n * c * h * w];
            for (dst, g) in dx.chunks_mut(h * w).zip(dy.chunks(oh * ow)) {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let (y1, x1) = ((2 * oy + 2).min(h), (2 * ox + 2).min(w));
                        let share = g[oy * ow + ox] / ((y1 - 2 * oy) * (x1 - 2 * ox)) as f64;
                        for y in 2 * oy..y1 {
                            for xx in 2 * ox..x1 {
                                dst[y * w + xx] = share;
                            }
                        }
                    }
                }
            }
            accumulate(grads, tape, *x, dx);
        }
        Op::SoftmaxCrossEntropy {
            logits,
            labels,
            probs,
        } => {
            let n = labels.len();
            let c = probs.len() / n.max(1);
            let scale = dy[0] / n as f64;
            let mut dl: Vec<f64> = probs.iter().map(|p| p * scale).collect();
            for (i, &l) in labels.iter().enumerate() {
                dl[i * c + l] -= scale;
            }
            accumulate(grads, tape, *logits, dl);
        }
        Op::Sum { x } => {
            let dx = vec![dy[0]; val(*x).numel()];
            accumulate(grads, tape, *x, dx);
        }
        Op::Dot { x, weights } => {
            let dx: Vec<f64> = weights.iter().map(|w| w * dy[0]).collect();
            accumulate(grads, tape, *x, dx);
        }
    }
}

fn sum_in_order(partials: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut total = vec![0.0; len];
    for p in partials {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    total
}

fn channel_sums(dy: &[f64], n: usize, c: usize, hw: usize) -> Vec<f64> {
    let mut db = vec![0.0; c];
    for i in 0..n {
        for (ch, slot) in db.iter_mut().enumerate() {
            *slot += dy[(i * c + ch) * hw..(i * c + ch + 1) * hw]
                .iter()
                .sum::<f64>();
        }
    }
    db
}
