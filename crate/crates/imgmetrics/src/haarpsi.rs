//! Haar wavelet-based perceptual similarity index for colour images.

use crate::filter::{downsample_mean2, filter_cols, filter_rows, separable};
use crate::image::check_same_size;
use crate::{ImageError, LumaImage, RgbImage};

pub const C: f64 = 30.0;
pub const ALPHA: f64 = 4.2;
pub const SCALES: usize = 3;

const YIQ: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [0.596, -0.274, -0.322],
    [0.211, -0.523, 0.312],
];

fn yiq(img: &RgbImage) -> [LumaImage; 3] {
    let rgb = [img.plane_255(0), img.plane_255(1), img.plane_255(2)];
    YIQ.map(|w| {
        let data = (0..rgb[0].len())
            .map(|i| w[0] * rgb[0][i] + w[1] * rgb[1][i] + w[2] * rgb[2][i])
            .collect();
        LumaImage::from_parts(img.width(), img.height(), data)
    })
}

/// Support of a `2^k`-tap 'same' convolution: offsets `2^(k-1)` down to
/// `1 - 2^(k-1)`.
fn haar_support(scale: usize) -> std::ops::RangeInclusive<isize> {
    let half = 1isize << (scale - 1);
    (1 - half)..=half
}

/// Haar detail coefficients at `scale` (1-based), across rows and across
/// columns. Samples with positive offset carry the negative half of the
/// filter.
fn haar_details(img: &LumaImage, scale: usize) -> (LumaImage, LumaImage) {
    let gain = (0.5f64).powi(scale as i32);
    let flat: Vec<(isize, f64)> = haar_support(scale).map(|o| (o, gain)).collect();
    let step: Vec<(isize, f64)> = haar_support(scale).map(|o| (o, if o > 0 { -1.0 } else { 1.0 })).collect();
    let vertical = filter_rows(&filter_cols(img, &step), &flat);
    let horizontal = filter_cols(&filter_rows(img, &step), &flat);
    (vertical, horizontal)
}

fn similarity(a: f64, b: f64) -> f64 {
    (2.0 * a * b + C) / (a * a + b * b + C)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-ALPHA * x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln() / ALPHA
}

/// HaarPSI on YIQ channels after 2x2 mean downsampling.
///
/// Luma similarity averages the two finest Haar scales per orientation and
/// is weighted by the larger third-scale magnitude of the pair. Chroma
/// similarity uses the 2x2 local mean of I and Q, weighted by the mean of
/// the two luma weights. When every weight is zero the plain mean is used.
pub fn haar_psi(reference: &RgbImage, distorted: &RgbImage) -> Result<f64, ImageError> {
    check_same_size(
        (reference.width(), reference.height()),
        (distorted.width(), distorted.height()),
    )?;
    let [yr, ir, qr] = yiq(reference).map(|p| downsample_mean2(&p));
    let [yd, id, qd] = yiq(distorted).map(|p| downsample_mean2(&p));
    let n = yr.data.len();

    let dr: Vec<(LumaImage, LumaImage)> = (1..=SCALES).map(|s| haar_details(&yr, s)).collect();
    let dd: Vec<(LumaImage, LumaImage)> = (1..=SCALES).map(|s| haar_details(&yd, s)).collect();
    let pick = |pair: &(LumaImage, LumaImage), ori: usize| -> Vec<f64> {
        let p = if ori == 0 { &pair.0 } else { &pair.1 };
        p.data.iter().map(|v| v.abs()).collect()
    };

    let mut sims: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(3);
    for ori in 0..2 {
        let (r1, r2, r3) = (pick(&dr[0], ori), pick(&dr[1], ori), pick(&dr[2], ori));
        let (d1, d2, d3) = (pick(&dd[0], ori), pick(&dd[1], ori), pick(&dd[2], ori));
        sims.push((0..n).map(|i| (similarity(r1[i], d1[i]) + similarity(r2[i], d2[i])) / 2.0).collect());
        weights.push((0..n).map(|i| r3[i].max(d3[i])).collect());
    }
    let pair = [(0, 0.5), (1, 0.5)];
    let local = |p: &LumaImage| -> Vec<f64> { separable(p, &pair, &pair).data.iter().map(|v| v.abs()).collect() };
    let (ir, id, qr, qd) = (local(&ir), local(&id), local(&qr), local(&qd));
    sims.push((0..n).map(|i| (similarity(ir[i], id[i]) + similarity(qr[i], qd[i])) / 2.0).collect());
    weights.push((0..n).map(|i| (weights[0][i] + weights[1][i]) / 2.0).collect());

    let total_w: f64 = weights.iter().flatten().sum();
    let top = sigmoid(1.0);
    // Weighted mean written as a deficit from sigmoid(1), so identical
    // inputs give exactly 1.
    let deficit = if total_w > 0.0 {
        sims.iter()
            .flatten()
            .zip(weights.iter().flatten())
            .map(|(s, w)| w * (top - sigmoid(*s)))
            .sum::<f64>()
            / total_w
    } else {
        sims.iter().flatten().map(|s| top - sigmoid(*s)).sum::<f64>() / (3 * n) as f64
    };
    if deficit == 0.0 {
        return Ok(1.0);
    }
    Ok(logit(top - deficit).powi(2).min(1.0))
}
