use crate::filter::{centred, mean, separable, subsample2};
use crate::image::check_same_size;
use crate::{ImageError, LumaImage};

pub const LEVELS: usize = 6;
pub const EPSILON: f64 = 0.1;
const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

fn blur(img: &LumaImage, gain: f64) -> LumaImage {
    let taps: Vec<(isize, f64)> = centred(&BINOMIAL).into_iter().map(|(o, w)| (o, w * gain)).collect();
    separable(img, &taps, &taps)
}

fn reduce(img: &LumaImage) -> LumaImage {
    subsample2(&blur(img, 1.0))
}

/// Zero-insertion upsampling to `width x height`, then blurring with a
/// gain of 2 per axis.
fn expand(img: &LumaImage, width: usize, height: usize) -> LumaImage {
    let mut up = vec![0.0; width * height];
    for r in 0..img.height {
        for c in 0..img.width {
            up[2 * r * width + 2 * c] = img.at(r, c);
        }
    }
    blur(&LumaImage::from_parts(width, height, up), 2.0)
}

/// Band-pass levels followed by the low-pass residual.
fn laplacian_pyramid(img: &LumaImage) -> Vec<LumaImage> {
    let mut levels = Vec::with_capacity(LEVELS);
    let mut cur = img.clone();
    for _ in 1..LEVELS {
        let low = reduce(&cur);
        let up = expand(&low, cur.width, cur.height);
        levels.push(cur.zip_map(&up, |a, b| a - b));
        cur = low;
    }
    levels.push(cur);
    levels
}

/// Divides a band by `EPSILON` plus the 3x3 mean of its magnitude.
fn normalise(band: &LumaImage) -> LumaImage {
    let third = [(-1, 1.0 / 3.0), (0, 1.0 / 3.0), (1, 1.0 / 3.0)];
    let amp = separable(&band.map(f64::abs), &third, &third);
    band.zip_map(&amp, |b, a| b / (EPSILON + a))
}

/// Normalised Laplacian pyramid distance on luma scaled to `[0, 1]`: the
/// mean over levels of the RMS difference of normalised coefficients.
pub fn nlpd(reference: &LumaImage, distorted: &LumaImage) -> Result<f64, ImageError> {
    check_same_size((reference.width, reference.height), (distorted.width, distorted.height))?;
    let min_side = 1 << (LEVELS - 1);
    if reference.width.min(reference.height) < min_side {
        return Err(ImageError::TooSmall {
            metric: "nlpd",
            min_side,
            width: reference.width,
            height: reference.height,
        });
    }
    let pr = laplacian_pyramid(&reference.map(|v| v / 255.0));
    let pd = laplacian_pyramid(&distorted.map(|v| v / 255.0));
    let per_level: Vec<f64> = pr
        .iter()
        .zip(&pd)
        .map(|(a, b)| {
            let (na, nb) = (normalise(a), normalise(b));
            let sq: Vec<f64> = na.data.iter().zip(&nb.data).map(|(x, y)| (x - y) * (x - y)).collect();
            mean(&sq).sqrt()
        })
        .collect();
    Ok(mean(&per_level))
}
