//! Raw numeric kernels shared by the tape operations.

use std::ops::Range;

/// Row and column strides of a matrix view into a flat slice.
pub(crate) type Strides = (isize, isize);

/// Row-major `rows x cols` storage.
pub(crate) fn row_major(cols: usize) -> Strides {
    (cols as isize, 1)
}

/// The transpose of row-major `rows x cols` storage, viewed as `cols x rows`.
pub(crate) fn transposed(cols: usize) -> Strides {
    (1, cols as isize)
}

fn span(rows: usize, cols: usize, (rs, cs): Strides) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
    }
}

/// `c = a * b + beta * c` on strided views, `a: m x k`, `b: k x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_strided(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: Strides,
    b: &[f64],
    sb: Strides,
    beta: f64,
    c: &mut [f64],
    sc: Strides,
) {
    assert!(a.len() >= span(m, k, sa) && b.len() >= span(k, n, sb) && c.len() >= span(m, n, sc));
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the span assertions above bound every index the strides reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0,
            sa.1,
            b.as_ptr(),
            sb.0,
            sb.1,
            beta,
            c.as_mut_ptr(),
            sc.0,
            sc.1,
        );
    }
}

/// `c = op(a) * op(b) + beta * c` for row-major matrices where `op(a)` is
/// `m x k`, `op(b)` is `k x n` and `c` is `m x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    beta: f64,
    c: &mut [f64],
) {
    let sa = if trans_a { transposed(m) } else { row_major(k) };
    let sb = if trans_b { transposed(k) } else { row_major(n) };
    gemm_strided(m, k, n, a, sa, b, sb, beta, c, row_major(n));
}

/// Unfolds the output rows `rows` of one `C, H, W` image into a
/// `(C*9) x (rows.len()*W)` patch matrix for a 3x3 kernel with stride 1 and
/// zero padding 1.
pub(crate) fn im2col_3x3_rows(
    img: &[f64],
    c: usize,
    h: usize,
    w: usize,
    rows: Range<usize>,
    cols: &mut [f64],
) {
    let hw = h * w;
    let len = rows.len() * w;
    for ch in 0..c {
        let plane = &img[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((ch * 9) + ky * 3 + kx) * len..][..len];
                for (t, y) in rows.clone().enumerate() {
                    let sy = y as isize + ky as isize - 1;
                    let dst = &mut row[t * w..(t + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => {
                            dst[0] = 0.0;
                            dst[1..].copy_from_slice(&src[..w - 1]);
                        }
                        1 => dst.copy_from_slice(src),
                        _ => {
                            dst[..w - 1].copy_from_slice(&src[1..]);
                            dst[w - 1] = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col_3x3_rows`]: scatters patch gradients back onto the
/// image, accumulating.
pub(crate) fn col2im_3x3_rows(
    cols: &[f64],
    c: usize,
    h: usize,
    w: usize,
    rows: Range<usize>,
    img: &mut [f64],
) {
    let hw = h * w;
    let len = rows.len() * w;
    for ch in 0..c {
        let plane = &mut img[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ch * 9) + ky * 3 + kx) * len..][..len];
                for (t, y) in rows.clone().enumerate() {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &row[t * w..(t + 1) * w];
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => {
                            for (d, s) in dst[..w - 1].iter_mut().zip(&src[1..]) {
                                *d += s;
                            }
                        }
                        1 => {
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += s;
                            }
                        }
                        _ => {
                            for (d, s) in dst[1..].iter_mut().zip(&src[..w - 1]) {
                                *d += s;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Output-row bands of a 3x3 convolution sized so one band of patch columns
/// stays cache resident.
pub(crate) fn row_bands(c: usize, h: usize, w: usize) -> impl Iterator<Item = Range<usize>> {
    let rows = (BAND_VALUES / (c * 9 * w).max(1)).clamp(1, h.max(1));
    (0..h).step_by(rows).map(move |y| y..(y + rows).min(h))
}

const BAND_VALUES: usize = 1 << 15;
