//! Four-parameter logistic mapping from raw metric scores to the JND scale.
//!
//! `S = B2 + (B1 - B2) / (1 + exp(-(s - B3) / B4))`, fitted by damped least
//! squares (Levenberg-Marquardt with a central-difference Jacobian) and, when
//! that stalls, polished with a Nelder-Mead simplex.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::dataset::{PairedSeries, Variant};
use crate::stats;

const MAX_ITERATIONS: usize = 2000;
const REL_TOLERANCE: f64 = 1e-10;
const SIMPLEX_MAX_ITERATIONS: usize = 20_000;
const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("objective scores are all equal")]
    ConstantPredictor,
    #[error("non-finite value in fit input")]
    NonFinite,
    #[error("variants do not cover the same stimuli")]
    MisalignedVariants,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    #[serde(rename = "B1")]
    pub b1: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    #[serde(rename = "B3")]
    pub b3: f64,
    #[serde(rename = "B4")]
    pub b4: f64,
    pub fit_rmse: f64,
    pub converged: bool,
    /// Number of `+inf` scores replaced by a finite stand-in before fitting.
    pub clamped_sentinels: usize,
}

impl LogisticParams {
    pub fn new(b1: f64, b2: f64, b3: f64, b4: f64) -> Self {
        Self {
            b1,
            b2,
            b3,
            b4,
            fit_rmse: 0.0,
            converged: true,
            clamped_sentinels: 0,
        }
    }

    fn from_vec(p: &Vector4<f64>) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }

    fn as_vec(&self) -> Vector4<f64> {
        Vector4::new(self.b1, self.b2, self.b3, self.b4)
    }

    pub fn apply(&self, s_obj: f64) -> f64 {
        apply_logistic(self, s_obj)
    }

    pub fn apply_all(&self, s_obj: &[f64]) -> Vec<f64> {
        s_obj.iter().map(|&s| self.apply(s)).collect()
    }
}

/// Evaluates the logistic. Infinite inputs map to the matching asymptote.
pub fn apply_logistic(p: &LogisticParams, s_obj: f64) -> f64 {
    if s_obj.is_infinite() {
        let toward_b1 = (s_obj > 0.0) == (p.b4 > 0.0);
        return if toward_b1 { p.b1 } else { p.b2 };
    }
    logistic(p.b1, p.b2, p.b3, p.b4, s_obj)
}

#[inline]
fn logistic(b1: f64, b2: f64, b3: f64, b4: f64, s: f64) -> f64 {
    b2 + (b1 - b2) / (1.0 + (-(s - b3) / b4).exp())
}

/// JSON record for one fitted transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub metric: String,
    pub variant: String,
    #[serde(flatten)]
    pub params: LogisticParams,
}

/// Replaces `+inf` scores by `max(finite) + IQR(finite)`.
///
/// Returns the patched scores and how many were replaced. When the finite
/// scores have no spread the full range, then `1.0`, is used as the offset.
pub fn clamp_sentinels(scores: &[f64]) -> Result<(Vec<f64>, usize), FitError> {
    let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    let n_inf = scores.iter().filter(|s| **s == f64::INFINITY).count();
    if finite.len() + n_inf != scores.len() {
        return Err(FitError::NonFinite);
    }
    if n_inf == 0 {
        return Ok((scores.to_vec(), 0));
    }
    if finite.is_empty() {
        return Err(FitError::ConstantPredictor);
    }
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut spread = stats::quantile(&finite, 0.75) - stats::quantile(&finite, 0.25);
    if spread <= 0.0 {
        spread = max - min;
    }
    if spread <= 0.0 {
        spread = 1.0;
    }
    let stand_in = max + spread;
    let patched = scores
        .iter()
        .map(|&s| if s.is_finite() { s } else { stand_in })
        .collect();
    Ok((patched, n_inf))
}

/// Least-squares fit of the logistic to `(s_obj, s_subj)`.
///
/// `+inf` scores are clamped first (see [`clamp_sentinels`]). A fit that does
/// not reach the tolerance is still returned, with `converged = false`.
pub fn fit_logistic(s_obj: &[f64], s_subj: &[f64]) -> Result<LogisticParams, FitError> {
    if s_obj.len() != s_subj.len() {
        return Err(FitError::LengthMismatch(s_obj.len(), s_subj.len()));
    }
    if s_obj.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints(s_obj.len()));
    }
    if s_subj.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let (x, clamped) = clamp_sentinels(s_obj)?;
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if max <= min {
        return Err(FitError::ConstantPredictor);
    }
    let mut params = Fitter::new(&x, s_subj).run();
    params.clamped_sentinels = clamped;
    Ok(params)
}

/// One parameter set fitted on the concatenation of two variants that share
/// the same stimuli (and therefore the same targets).
pub fn fit_logistic_joint(a: &PairedSeries, b: &PairedSeries) -> Result<LogisticParams, FitError> {
    if a.stimulus_ids != b.stimulus_ids || a.jnd_mean != b.jnd_mean {
        return Err(FitError::MisalignedVariants);
    }
    let x: Vec<f64> = a.scores.iter().chain(&b.scores).copied().collect();
    let y: Vec<f64> = a.jnd_mean.iter().chain(&b.jnd_mean).copied().collect();
    fit_logistic(&x, &y)
}

/// Convenience for JSON export.
pub fn transform_record(metric: &str, variant: Variant, params: LogisticParams) -> TransformRecord {
    TransformRecord {
        metric: metric.to_string(),
        variant: variant.to_string(),
        params,
    }
}

struct Fitter<'a> {
    x: &'a [f64],
    y: &'a [f64],
    x_scale: f64,
    y_scale: f64,
}

impl<'a> Fitter<'a> {
    fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let y_span = span(y);
        Self {
            x,
            y,
            x_scale: span(x),
            y_scale: if y_span > 0.0 { y_span } else { 1.0 },
        }
    }

    fn initial(&self) -> Vector4<f64> {
        let y_max = self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y_min = self.y.iter().copied().fold(f64::INFINITY, f64::min);
        let rx = stats::fractional_ranks(self.x);
        let ry = stats::fractional_ranks(self.y);
        let rho = pearson_or_zero(&rx, &ry);
        let sign = if rho < 0.0 { -1.0 } else { 1.0 };
        Vector4::new(y_max, y_min, stats::median(self.x), sign * self.x_scale / 8.0)
    }

    fn cost(&self, p: &Vector4<f64>) -> f64 {
        if p[3] == 0.0 || !p.iter().all(|v| v.is_finite()) {
            return f64::INFINITY;
        }
        self.x
            .iter()
            .zip(self.y)
            .map(|(&x, &y)| {
                let r = logistic(p[0], p[1], p[2], p[3], x) - y;
                r * r
            })
            .sum()
    }

    fn residuals(&self, p: &Vector4<f64>) -> Vec<f64> {
        self.x
            .iter()
            .zip(self.y)
            .map(|(&x, &y)| logistic(p[0], p[1], p[2], p[3], x) - y)
            .collect()
    }

    fn step_sizes(&self, p: &Vector4<f64>) -> [f64; 4] {
        let h = 1e-6;
        [
            h * p[0].abs().max(self.y_scale),
            h * p[1].abs().max(self.y_scale),
            h * p[2].abs().max(self.x_scale),
            h * p[3].abs().max(1e-3 * self.x_scale),
        ]
    }

    /// Normal-equation pieces `JᵀJ` and `Jᵀr` from a central-difference
    /// Jacobian.
    fn normal_equations(&self, p: &Vector4<f64>, r: &[f64]) -> (Matrix4<f64>, Vector4<f64>) {
        let steps = self.step_sizes(p);
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (j, col) in cols.iter_mut().enumerate() {
            let mut hi = *p;
            let mut lo = *p;
            hi[j] += steps[j];
            lo[j] -= steps[j];
            // Keep the scale parameter away from zero while differencing.
            if j == 3 && lo[3].signum() != p[3].signum() {
                lo[3] = p[3];
                *col = self
                    .x
                    .iter()
                    .map(|&x| {
                        (logistic(hi[0], hi[1], hi[2], hi[3], x) - logistic(lo[0], lo[1], lo[2], lo[3], x))
                            / steps[j]
                    })
                    .collect();
                continue;
            }
            *col = self
                .x
                .iter()
                .map(|&x| {
                    (logistic(hi[0], hi[1], hi[2], hi[3], x) - logistic(lo[0], lo[1], lo[2], lo[3], x))
                        / (2.0 * steps[j])
                })
                .collect();
        }
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for a in 0..4 {
            jtr[a] = cols[a].iter().zip(r).map(|(c, r)| c * r).sum();
            for b in a..4 {
                let v: f64 = cols[a].iter().zip(&cols[b]).map(|(c, d)| c * d).sum();
                jtj[(a, b)] = v;
                jtj[(b, a)] = v;
            }
        }
        (jtj, jtr)
    }

    /// Levenberg-Marquardt from `start`. Returns `(params, cost, converged)`.
    fn levenberg_marquardt(&self, start: Vector4<f64>) -> (Vector4<f64>, f64, bool) {
        let mut p = start;
        let mut cost = self.cost(&p);
        let mut lambda = 1e-3;
        let tiny_cost = 1e-30 * self.y.len() as f64 * self.y_scale * self.y_scale;
        for _ in 0..MAX_ITERATIONS {
            if cost <= tiny_cost {
                return (p, cost, true);
            }
            let r = self.residuals(&p);
            let (jtj, jtr) = self.normal_equations(&p, &r);
            let mut accepted = false;
            while lambda < 1e20 {
                let mut a = jtj;
                for k in 0..4 {
                    a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * (1.0 + jtj.diagonal().max()));
                }
                let Some(delta) = a.lu().solve(&(-jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let candidate = p + delta;
                let new_cost = self.cost(&candidate);
                if new_cost < cost {
                    let rel_cost = (cost - new_cost) / cost;
                    let rel_step = delta.norm() / (p.norm() + REL_TOLERANCE);
                    p = candidate;
                    cost = new_cost;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel_cost < REL_TOLERANCE || rel_step < REL_TOLERANCE {
                        return (p, cost, true);
                    }
                    break;
                }
                lambda *= 4.0;
            }
            if !accepted {
                // No descent direction left: stationary to working precision
                // when the gradient is negligible relative to the cost.
                let r = self.residuals(&p);
                let (_, g) = self.normal_equations(&p, &r);
                let stationary = g.norm() <= 1e-8 * (cost + tiny_cost).sqrt() * self.y_scale;
                return (p, cost, stationary);
            }
        }
        (p, cost, false)
    }

    fn nelder_mead(&self, start: Vector4<f64>) -> (Vector4<f64>, f64, bool) {
        let mut simplex: Vec<Vector4<f64>> = vec![start];
        let scales = [0.05 * self.y_scale, 0.05 * self.y_scale, 0.05 * self.x_scale, 0.05 * start[3].abs().max(1e-6 * self.x_scale)];
        for (k, s) in scales.iter().enumerate() {
            let mut v = start;
            v[k] += s;
            simplex.push(v);
        }
        let mut costs: Vec<f64> = simplex.iter().map(|v| self.cost(v)).collect();
        for _ in 0..SIMPLEX_MAX_ITERATIONS {
            let mut order: Vec<usize> = (0..5).collect();
            order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
            simplex = order.iter().map(|&i| simplex[i]).collect();
            costs = order.iter().map(|&i| costs[i]).collect();
            let spread = costs[4] - costs[0];
            if spread <= REL_TOLERANCE * costs[0].abs() + 1e-300 {
                return (simplex[0], costs[0], true);
            }
            let centroid = simplex[..4].iter().fold(Vector4::zeros(), |acc, v| acc + v) / 4.0;
            let worst = simplex[4];
            let reflected = centroid + (centroid - worst);
            let fr = self.cost(&reflected);
            if fr < costs[0] {
                let expanded = centroid + 2.0 * (centroid - worst);
                let fe = self.cost(&expanded);
                if fe < fr {
                    simplex[4] = expanded;
                    costs[4] = fe;
                } else {
                    simplex[4] = reflected;
                    costs[4] = fr;
                }
            } else if fr < costs[3] {
                simplex[4] = reflected;
                costs[4] = fr;
            } else {
                let contracted = if fr < costs[4] {
                    centroid + 0.5 * (reflected - centroid)
                } else {
                    centroid + 0.5 * (worst - centroid)
                };
                let fc = self.cost(&contracted);
                if fc < costs[4].min(fr) {
                    simplex[4] = contracted;
                    costs[4] = fc;
                } else {
                    let best = simplex[0];
                    for k in 1..5 {
                        simplex[k] = best + 0.5 * (simplex[k] - best);
                        costs[k] = self.cost(&simplex[k]);
                    }
                }
            }
        }
        let best = (0..5).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).unwrap_or(0);
        (simplex[best], costs[best], false)
    }

    fn run(&self) -> LogisticParams {
        let start = self.initial();
        let (mut p, mut cost, mut converged) = self.levenberg_marquardt(start);
        if !converged {
            let (q, qcost, nm_ok) = self.nelder_mead(p);
            if qcost <= cost {
                p = q;
                cost = qcost;
            }
            let (r, rcost, lm_ok) = self.levenberg_marquardt(p);
            if rcost <= cost {
                p = r;
                cost = rcost;
            }
            converged = lm_ok || nm_ok;
        }
        let mut out = LogisticParams::from_vec(&p);
        out.fit_rmse = (cost / self.x.len() as f64).sqrt();
        out.converged = converged;
        out
    }
}

fn pearson_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let ma = stats::mean(a);
    let mb = stats::mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

impl LogisticParams {
    pub fn to_array(&self) -> [f64; 4] {
        let v = self.as_vec();
        [v[0], v[1], v[2], v[3]]
    }
}
