use crate::filter::{downsample_mean2, filter_cols, filter_rows};
use crate::image::check_same_size;
use crate::{ImageError, LumaImage};

pub const C: f64 = 170.0;

/// Prewitt gradient magnitude. Differences are taken on unscaled sums and
/// divided by 3 last, so integer-valued inputs give exact differences.
fn gradient_magnitude(img: &LumaImage) -> Vec<f64> {
    let smooth = [(-1, 1.0), (0, 1.0), (1, 1.0)];
    let diff = [(-1, 1.0), (1, -1.0)];
    let gx = filter_rows(&filter_cols(img, &smooth), &diff);
    let gy = filter_cols(&filter_rows(img, &smooth), &diff);
    gx.data
        .iter()
        .zip(&gy.data)
        .map(|(a, b)| (a * a + b * b).sqrt() / 3.0)
        .collect()
}

/// Population standard deviation of the gradient-magnitude similarity map,
/// computed after 2x2 mean downsampling.
pub fn gmsd(reference: &LumaImage, distorted: &LumaImage) -> Result<f64, ImageError> {
    check_same_size((reference.width, reference.height), (distorted.width, distorted.height))?;
    let gr = gradient_magnitude(&downsample_mean2(reference));
    let gd = gradient_magnitude(&downsample_mean2(distorted));
    let gms: Vec<f64> = gr
        .iter()
        .zip(&gd)
        .map(|(r, d)| (2.0 * r * d + C) / (r * r + d * d + C))
        .collect();
    let n = gms.len() as f64;
    let m = gms.iter().sum::<f64>() / n;
    let var = gms.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    Ok(var.sqrt())
}
