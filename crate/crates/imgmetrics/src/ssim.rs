use crate::filter::{centred, downsample_mean2, gaussian_kernel, mean, separable};
use crate::image::check_same_size;
use crate::{ImageError, LumaImage};

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const DATA_RANGE: f64 = 255.0;
/// Published per-scale exponents. They sum to 1.0001 and are renormalised
/// by [`ms_weights`] before use.
pub const MS_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

pub fn ms_weights() -> [f64; 5] {
    let total: f64 = MS_WEIGHTS.iter().sum();
    MS_WEIGHTS.map(|w| w / total)
}

/// Mean SSIM and mean contrast-structure term.
fn ssim_terms(x: &LumaImage, y: &LumaImage) -> (f64, f64) {
    let taps = centred(&gaussian_kernel(WINDOW, SIGMA));
    let blur = |img: &LumaImage| separable(img, &taps, &taps);
    let mu_x = blur(x);
    let mu_y = blur(y);
    let xx = blur(&x.zip_map(x, |a, b| a * b));
    let yy = blur(&y.zip_map(y, |a, b| a * b));
    let xy = blur(&x.zip_map(y, |a, b| a * b));
    let c1 = (K1 * DATA_RANGE).powi(2);
    let c2 = (K2 * DATA_RANGE).powi(2);

    let n = x.data.len();
    let mut ssim = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    for i in 0..n {
        let (mx, my) = (mu_x.data[i], mu_y.data[i]);
        let sxx = xx.data[i] - mx * mx;
        let syy = yy.data[i] - my * my;
        let sxy = xy.data[i] - mx * my;
        let lum = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
        let c = (2.0 * sxy + c2) / (sxx + syy + c2);
        cs.push(c);
        ssim.push(lum * c);
    }
    (mean(&ssim), mean(&cs))
}

fn check_min_side(metric: &'static str, img: &LumaImage, min_side: usize) -> Result<(), ImageError> {
    if img.width.min(img.height) < min_side {
        return Err(ImageError::TooSmall {
            metric,
            min_side,
            width: img.width,
            height: img.height,
        });
    }
    Ok(())
}

/// Mean local SSIM with an 11x11 Gaussian window.
pub fn ssim(reference: &LumaImage, distorted: &LumaImage) -> Result<f64, ImageError> {
    check_same_size((reference.width, reference.height), (distorted.width, distorted.height))?;
    check_min_side("ssim", reference, WINDOW)?;
    Ok(ssim_terms(reference, distorted).0)
}

/// Five-scale SSIM; contrast-structure terms at the four finer scales and
/// full SSIM at the coarsest. Negative terms are clamped to zero so the
/// fractional powers stay real.
pub fn ms_ssim(reference: &LumaImage, distorted: &LumaImage) -> Result<f64, ImageError> {
    check_same_size((reference.width, reference.height), (distorted.width, distorted.height))?;
    let weights = ms_weights();
    let scales = weights.len();
    check_min_side("ms_ssim", reference, WINDOW << (scales - 1))?;
    let mut x = reference.clone();
    let mut y = distorted.clone();
    let mut score = 1.0;
    for (s, w) in weights.iter().enumerate() {
        let (ssim_mean, cs_mean) = ssim_terms(&x, &y);
        let term = if s + 1 == scales { ssim_mean } else { cs_mean };
        score *= term.max(0.0).powf(*w);
        if s + 1 < scales {
            x = downsample_mean2(&x);
            y = downsample_mean2(&y);
        }
    }
    Ok(score)
}
