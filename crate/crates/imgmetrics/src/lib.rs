//! Native full-reference image quality metrics.
//!
//! All metrics work on the 0-255 scale with symmetric border padding.

pub mod filter;
mod gmsd;
mod haarpsi;
mod image;
mod nlpd;
mod psnr;
mod ssim;
mod uqi;

use std::path::Path;

pub use gmsd::gmsd;
pub use haarpsi::haar_psi;
pub use image::{decode_png, to_luma_bt709, LumaImage, RgbImage, BT709_WEIGHTS};
pub use nlpd::nlpd;
pub use psnr::psnr_y;
pub use ssim::{ms_ssim, ms_weights, ssim, MS_WEIGHTS};
pub use uqi::uqi;

/// Output names, in the order [`compute_all`] returns them.
pub const METRIC_NAMES: [&str; 7] = ["psnr_y", "ssim", "ms_ssim", "gmsd", "uqi", "nlpd", "haar_psi"];

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {message}")]
    Decode { path: String, message: String },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("{0} has an alpha channel")]
    AlphaChannel(String),
    #[error("image has zero area")]
    Empty,
    #[error("plane holds {got} samples, expected {expected}")]
    PlaneSize { expected: usize, got: usize },
    #[error("image contains non-finite samples")]
    NonFinite,
    #[error("size mismatch: reference is {ref_width}x{ref_height}, distorted is {dist_width}x{dist_height}")]
    DimensionMismatch {
        ref_width: usize,
        ref_height: usize,
        dist_width: usize,
        dist_height: usize,
    },
    #[error("{metric} needs both sides >= {min_side}, image is {width}x{height}")]
    TooSmall {
        metric: &'static str,
        min_side: usize,
        width: usize,
        height: usize,
    },
}

/// All seven metrics for one decoded pair.
pub fn compute_all_images(reference: &RgbImage, distorted: &RgbImage) -> Result<Vec<(&'static str, f64)>, ImageError> {
    image::check_same_size(
        (reference.width(), reference.height()),
        (distorted.width(), distorted.height()),
    )?;
    let (yr, yd) = (to_luma_bt709(reference), to_luma_bt709(distorted));
    let scores = [
        psnr_y(&yr, &yd, 255.0)?,
        ssim(&yr, &yd)?,
        ms_ssim(&yr, &yd)?,
        gmsd(&yr, &yd)?,
        uqi(&yr, &yd)?,
        nlpd(&yr, &yd)?,
        haar_psi(reference, distorted)?,
    ];
    Ok(METRIC_NAMES.into_iter().zip(scores).collect())
}

pub fn compute_all(ref_path: impl AsRef<Path>, dist_path: impl AsRef<Path>) -> Result<Vec<(&'static str, f64)>, ImageError> {
    let reference = decode_png(ref_path)?;
    let distorted = decode_png(dist_path)?;
    compute_all_images(&reference, &distorted)
}
