use crate::image::check_same_size;
use crate::{ImageError, LumaImage};

/// PSNR in dB; identical images give `+inf`.
pub fn psnr_y(reference: &LumaImage, distorted: &LumaImage, data_range: f64) -> Result<f64, ImageError> {
    check_same_size((reference.width, reference.height), (distorted.width, distorted.height))?;
    let se: f64 = reference
        .data
        .iter()
        .zip(&distorted.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mse = se / reference.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / mse).log10())
}
