//! Nadaraya-Watson regression with a Gaussian kernel and leave-one-out
//! bandwidth selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Kernel mass below which an estimate is left undefined.
pub const UNDERFLOW_GUARD: f64 = 1e-300;
pub const DEFAULT_CANDIDATES: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("no candidate bandwidth gives defined leave-one-out estimates")]
    NoUsableBandwidth,
    #[error("x values span a zero range")]
    ZeroRange,
}

type Result<T> = std::result::Result<T, KernelError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionCurve {
    pub grid_x: Vec<f64>,
    /// `NaN` where the estimate is undefined.
    pub estimate_y: Vec<f64>,
    pub defined: Vec<bool>,
    pub bandwidth: f64,
}

impl RegressionCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid_x,estimate_y,defined\n");
        for ((x, y), d) in self.grid_x.iter().zip(&self.estimate_y).zip(&self.defined) {
            if *d {
                out.push_str(&format!("{x},{y},1\n"));
            } else {
                out.push_str(&format!("{x},,0\n"));
            }
        }
        out
    }
}

fn kernel(u: f64) -> f64 {
    (-0.5 * u * u).exp()
}

fn check_inputs(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(KernelError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(KernelError::TooFewPoints { needed: min, got: x.len() });
    }
    Ok(())
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(KernelError::InvalidBandwidth(h));
    }
    Ok(())
}

pub fn nw_regress(x: &[f64], y: &[f64], h: f64, grid: &[f64]) -> Result<RegressionCurve> {
    check_inputs(x, y, 2)?;
    check_bandwidth(h)?;
    let mut estimate_y = Vec::with_capacity(grid.len());
    let mut defined = Vec::with_capacity(grid.len());
    for &g in grid {
        let (mut s0, mut s1) = (0.0, 0.0);
        for (xi, yi) in x.iter().zip(y) {
            let k = kernel((g - xi) / h);
            s0 += k;
            s1 += k * yi;
        }
        if s0 > UNDERFLOW_GUARD {
            // Rounding can push the ratio a hair outside the data range.
            let (lo, hi) = min_max(y);
            estimate_y.push((s1 / s0).clamp(lo, hi));
            defined.push(true);
        } else {
            estimate_y.push(f64::NAN);
            defined.push(false);
        }
    }
    Ok(RegressionCurve {
        grid_x: grid.to_vec(),
        estimate_y,
        defined,
        bandwidth: h,
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)))
}

/// Leave-one-out squared error for one bandwidth, or `None` if any
/// held-out estimate is undefined.
///
/// Each held-out estimate skips its own term rather than subtracting
/// `K(0)` from the full sum, which loses precision for narrow kernels.
pub fn loo_cv_score(x: &[f64], y: &[f64], h: f64) -> Result<Option<f64>> {
    check_inputs(x, y, 3)?;
    check_bandwidth(h)?;
    let mut total = 0.0;
    for (i, (xi, yi)) in x.iter().zip(y).enumerate() {
        let (mut s0, mut s1) = (0.0, 0.0);
        for (j, (xj, yj)) in x.iter().zip(y).enumerate() {
            if j != i {
                let k = kernel((xi - xj) / h);
                s0 += k;
                s1 += k * yj;
            }
        }
        if !(s0 > UNDERFLOW_GUARD) {
            return Ok(None);
        }
        let r = yi - s1 / s0;
        total += r * r;
    }
    Ok(Some(total))
}

/// `n` log-spaced bandwidths from `0.01 * range(x)` to `range(x)`.
pub fn default_candidates(x: &[f64], n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = min_max(x);
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return Err(KernelError::ZeroRange);
    }
    if n == 1 {
        return Ok(vec![range]);
    }
    let (a, b) = ((0.01 * range).ln(), range.ln());
    Ok((0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Candidate minimising the leave-one-out error; ties go to the smallest.
pub fn loo_cv_bandwidth(x: &[f64], y: &[f64], candidates: &[f64]) -> Result<f64> {
    check_inputs(x, y, 3)?;
    for &h in candidates {
        check_bandwidth(h)?;
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let scores: Vec<Option<f64>> = sorted
        .par_iter()
        .map(|&h| loo_cv_score(x, y, h))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, f64)> = None;
    for (h, s) in sorted.iter().zip(scores) {
        if let Some(s) = s {
            if best.is_none_or(|(_, bs)| s < bs) {
                best = Some((*h, s));
            }
        }
    }
    best.map(|(h, _)| h).ok_or(KernelError::NoUsableBandwidth)
}

/// Least-squares slope of `y` on `x` over the defined points of a curve.
pub fn linear_trend(curve: &RegressionCurve) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .grid_x
        .iter()
        .zip(&curve.estimate_y)
        .zip(&curve.defined)
        .filter(|(_, d)| **d)
        .map(|((x, y), _)| (*x, *y))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Uniform grid of `n` points spanning the range of `x`.
pub fn uniform_grid(x: &[f64], n: usize) -> Vec<f64> {
    let (lo, hi) = min_max(x);
    if n < 2 || hi == lo {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Regression with a cross-validated bandwidth over [`default_candidates`].
pub fn fit_curve(x: &[f64], y: &[f64], grid: &[f64]) -> Result<RegressionCurve> {
    let cands = default_candidates(x, DEFAULT_CANDIDATES)?;
    let h = loo_cv_bandwidth(x, y, &cands)?;
    nw_regress(x, y, h, grid)
}
