//! Separable filtering with symmetric (edge-duplicating) padding.

use crate::LumaImage;

/// Maps any integer index onto `0..n` by mirroring with the edge sample
/// repeated (`.. c b a | a b c | c b a ..`).
#[inline]
pub fn sym(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// `(offset, weight)` pairs of a 1-D filter.
pub type Taps = [(isize, f64)];

/// `out[r][c] = sum_k w_k * img[r][c + off_k]`.
pub fn filter_rows(img: &LumaImage, taps: &Taps) -> LumaImage {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &img.data[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0.0;
            for &(off, k) in taps {
                acc += k * row[sym(c as isize + off, w)];
            }
            out[r * w + c] = acc;
        }
    }
    LumaImage::from_parts(w, h, out)
}

/// `out[r][c] = sum_k w_k * img[r + off_k][c]`.
pub fn filter_cols(img: &LumaImage, taps: &Taps) -> LumaImage {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for &(off, k) in taps {
            let src = sym(r as isize + off, h) * w;
            for c in 0..w {
                out[r * w + c] += k * img.data[src + c];
            }
        }
    }
    LumaImage::from_parts(w, h, out)
}

pub fn separable(img: &LumaImage, col_taps: &Taps, row_taps: &Taps) -> LumaImage {
    filter_rows(&filter_cols(img, col_taps), row_taps)
}

/// Centred taps `-(len/2)..=len/2` for an odd-length kernel.
pub fn centred(kernel: &[f64]) -> Vec<(isize, f64)> {
    let half = (kernel.len() / 2) as isize;
    kernel.iter().enumerate().map(|(k, w)| (k as isize - half, *w)).collect()
}

/// Normalised 1-D Gaussian of odd length.
pub fn gaussian_kernel(len: usize, sigma: f64) -> Vec<f64> {
    let half = (len / 2) as f64;
    let raw: Vec<f64> = (0..len)
        .map(|k| {
            let x = k as f64 - half;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}

/// Mean over each 2x2 block anchored at even coordinates; odd trailing
/// rows and columns are mirrored. Output size is `ceil(n / 2)`.
pub fn downsample_mean2(img: &LumaImage) -> LumaImage {
    let pair = [(0, 0.5), (1, 0.5)];
    subsample2(&separable(img, &pair, &pair))
}

/// Keeps samples at even row and column indices.
pub fn subsample2(img: &LumaImage) -> LumaImage {
    let (w2, h2) = (img.width.div_ceil(2), img.height.div_ceil(2));
    let mut out = Vec::with_capacity(w2 * h2);
    for r in (0..img.height).step_by(2) {
        for c in (0..img.width).step_by(2) {
            out.push(img.at(r, c));
        }
    }
    LumaImage::from_parts(w2, h2, out)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
