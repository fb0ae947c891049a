use crate::filter::sym;
use crate::image::check_same_size;
use crate::{ImageError, LumaImage};

pub const BLOCK: usize = 8;
/// Variances below this are treated as a flat window.
pub const FLAT_VARIANCE: f64 = 1e-10;

/// Quality index of one window from its first and second moments.
pub fn window_index(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64) -> f64 {
    let flat_x = vx < FLAT_VARIANCE;
    let flat_y = vy < FLAT_VARIANCE;
    let mean_sq = mx * mx + my * my;
    let lum = if mean_sq == 0.0 { 1.0 } else { 2.0 * mx * my / mean_sq };
    if flat_x && flat_y {
        // 0/0 in the correlation and contrast terms; only luminance is left.
        return lum;
    }
    lum * (2.0 * cxy / (vx + vy))
}

/// Mean of the windowed index over an 8x8 window at every pixel, offsets
/// `-4..=3` with symmetric padding.
pub fn uqi(reference: &LumaImage, distorted: &LumaImage) -> Result<f64, ImageError> {
    check_same_size((reference.width, reference.height), (distorted.width, distorted.height))?;
    let (w, h) = (reference.width, reference.height);
    let half = (BLOCK / 2) as isize;
    let offsets: Vec<isize> = (-half..half).collect();
    let nwin = (BLOCK * BLOCK) as f64;
    let mut xs = Vec::with_capacity(BLOCK * BLOCK);
    let mut ys = Vec::with_capacity(BLOCK * BLOCK);
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            xs.clear();
            ys.clear();
            for &dr in &offsets {
                let rr = sym(r as isize + dr, h);
                for &dc in &offsets {
                    let cc = sym(c as isize + dc, w);
                    xs.push(reference.at(rr, cc));
                    ys.push(distorted.at(rr, cc));
                }
            }
            let mx = xs.iter().sum::<f64>() / nwin;
            let my = ys.iter().sum::<f64>() / nwin;
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for (a, b) in xs.iter().zip(&ys) {
                let (da, db) = (a - mx, b - my);
                vx += da * da;
                vy += db * db;
                cxy += da * db;
            }
            total += window_index(mx, my, vx / nwin, vy / nwin, cxy / nwin);
        }
    }
    Ok(total / (w * h) as f64)
}
