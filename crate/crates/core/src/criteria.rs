//! Evaluation criteria for one metric over one fidelity slice.
//!
//! Correlations (PLCC, SROCC, Kendall tau-b), error measures on transformed
//! scores (RMSE, Z-RMSE, the Gaussian log-likelihood ratio and the outlier
//! ratio) and the perceptually weighted rank correlation curve.

use serde::{Deserialize, Serialize};

use crate::dataset::{FidelityRange, MetricScoreTable, PairedSeries, Polarity, SubjectiveDataset, Variant};
use crate::stats;
use crate::transform::{clamp_sentinels, fit_logistic, LogisticParams};
use crate::EvalError;

/// Z value of the outlier threshold (95 % two-sided).
pub const DEFAULT_OUTLIER_Z: f64 = 1.96;
/// Number of intervals in the default sensory-threshold grid.
pub const DEFAULT_ST_STEPS: usize = 64;
/// Default decay (JND units) of the PWRC quality weight.
pub const DEFAULT_PWRC_LAMBDA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CriteriaError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("standard deviation at index {0} is not positive")]
    NonPositiveSigma(usize),
    #[error("sensory-threshold grid must start at 0 and increase strictly")]
    DegenerateGrid,
}

type Result<T> = std::result::Result<T, CriteriaError>;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(CriteriaError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

fn check_sigma(sigma: &[f64]) -> Result<()> {
    match sigma.iter().position(|s| !(*s > 0.0)) {
        Some(i) => Err(CriteriaError::NonPositiveSigma(i)),
        None => Ok(()),
    }
}

/// Pearson correlation with population normalisation.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    if x.len() < 3 {
        return Err(CriteriaError::TooFewSamples { needed: 3, got: x.len() });
    }
    let mx = stats::mean(x);
    let my = stats::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CriteriaError::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson of tie-averaged ranks.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    plcc(&stats::fractional_ranks(x), &stats::fractional_ranks(y))
}

/// Kendall tau-b in `O(n log n)` (Knight's merge-sort algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len();
    if n < 3 {
        return Err(CriteriaError::TooFewSamples { needed: 3, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * (t.saturating_sub(1)) / 2;
    let n0 = pairs(n as u64);

    // Ties in x, and joint ties in (x, y), from the lexicographic order.
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for w in 1..n {
        let (a, b) = (idx[w - 1], idx[w]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    // Sorting the x-ordered sequence by y: each exchange is one discordant pair.
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for w in 1..n {
        if ys[w] == ys[w - 1] {
            run_y += 1;
        } else {
            tied_y += pairs(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs(run_y);

    let denom_x = n0 - tied_x;
    let denom_y = n0 - tied_y;
    if denom_x == 0 || denom_y == 0 {
        return Err(CriteriaError::ConstantSeries);
    }
    let s = n0 as i64 - tied_x as i64 - tied_y as i64 + tied_xy as i64 - 2 * swaps as i64;
    Ok(tau_b_from_counts(s, denom_x, denom_y))
}

/// `S / sqrt(n_x * n_y)` where `S = concordant - discordant` and `n_x`,
/// `n_y` are the pair counts untied in each variable.
pub fn tau_b_from_counts(s: i64, untied_x: u64, untied_y: u64) -> f64 {
    (s as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt()).clamp(-1.0, 1.0)
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..].copy_from_slice(&v[j..]);
    v.copy_from_slice(buf);
    swaps
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_lengths(pred, target)?;
    if pred.is_empty() {
        return Err(CriteriaError::TooFewSamples { needed: 1, got: 0 });
    }
    let ss: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// RMSE of residuals standardised by the per-stimulus subjective deviation.
pub fn z_rmse(pred: &[f64], target: &[f64], sigma: &[f64]) -> Result<f64> {
    check_lengths(pred, target)?;
    check_lengths(pred, sigma)?;
    check_sigma(sigma)?;
    if pred.is_empty() {
        return Err(CriteriaError::TooFewSamples { needed: 1, got: 0 });
    }
    let ss: f64 = pred
        .iter()
        .zip(target)
        .zip(sigma)
        .map(|((p, t), s)| {
            let z = (p - t) / s;
            z * z
        })
        .sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// Log-likelihood ratio between the perfect predictor and `pred` under
/// independent Gaussians `N(target_i, sigma_i)`.
///
/// Evaluated as the difference of the two log-likelihoods so that it stays
/// independent of [`z_rmse`]; the normalisation terms cancel exactly.
pub fn llr(pred: &[f64], target: &[f64], sigma: &[f64]) -> Result<f64> {
    check_lengths(pred, target)?;
    check_lengths(pred, sigma)?;
    check_sigma(sigma)?;
    let mut log_l0 = 0.0;
    let mut log_l = 0.0;
    for ((p, t), s) in pred.iter().zip(target).zip(sigma) {
        let log_norm = -0.5 * (2.0 * std::f64::consts::PI * s * s).ln();
        log_l0 += log_norm;
        log_l += log_norm - (p - t) * (p - t) / (2.0 * s * s);
    }
    // Summing the quadratic terms directly avoids the cancellation in
    // `log_l0 - log_l`; both are kept so the identity is visible.
    let quad: f64 = pred
        .iter()
        .zip(target)
        .zip(sigma)
        .map(|((p, t), s)| (p - t) * (p - t) / (s * s))
        .sum::<f64>()
        * 0.5;
    debug_assert!((log_l0 - log_l - quad).abs() <= 1e-6 * (1.0 + quad) + 1e-9 * log_l0.abs());
    Ok(quad)
}

/// Fraction of stimuli with `|pred - target| > z * sigma`.
pub fn outlier_ratio(pred: &[f64], target: &[f64], sigma: &[f64], z: f64) -> Result<f64> {
    check_lengths(pred, target)?;
    check_lengths(pred, sigma)?;
    check_sigma(sigma)?;
    if pred.is_empty() {
        return Err(CriteriaError::TooFewSamples { needed: 1, got: 0 });
    }
    let outliers = pred
        .iter()
        .zip(target)
        .zip(sigma)
        .filter(|((p, t), s)| (*p - *t).abs() > z * **s)
        .count();
    Ok(outliers as f64 / pred.len() as f64)
}

/// Pair weighting of the sorting-accuracy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PwrcWeighting {
    /// Every activated pair counts equally.
    Uniform,
    /// `w_ij = exp(-min(t_i, t_j) / lambda)`: pairs involving a less impaired
    /// stimulus weigh more.
    QualityDecay { lambda: f64 },
}

impl Default for PwrcWeighting {
    fn default() -> Self {
        PwrcWeighting::QualityDecay {
            lambda: DEFAULT_PWRC_LAMBDA,
        }
    }
}

impl PwrcWeighting {
    pub fn weight(&self, t_i: f64, t_j: f64) -> f64 {
        match *self {
            PwrcWeighting::Uniform => 1.0,
            PwrcWeighting::QualityDecay { lambda } => (-t_i.min(t_j) / lambda).exp(),
        }
    }
}

/// Sorting accuracy as a function of the sensory threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaStCurve {
    pub thresholds: Vec<f64>,
    pub sa: Vec<f64>,
}

/// `0..=max(target)` in [`DEFAULT_ST_STEPS`] uniform steps.
pub fn default_st_grid(target: &[f64]) -> Result<Vec<f64>> {
    let max = target.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(CriteriaError::DegenerateGrid);
    }
    Ok((0..=DEFAULT_ST_STEPS)
        .map(|k| max * k as f64 / DEFAULT_ST_STEPS as f64)
        .collect())
}

/// SA(T) over pairs whose subjective gap exceeds `T`.
///
/// Concordant pairs add their weight, discordant pairs subtract it and pairs
/// tied in the prediction only enter the normaliser. An empty activation set
/// gives `SA = 0`. Both inputs are on the impairment scale.
pub fn pwrc_curve(pred: &[f64], target: &[f64], st_grid: &[f64], weighting: PwrcWeighting) -> Result<SaStCurve> {
    check_lengths(pred, target)?;
    let n = pred.len();
    if n < 3 {
        return Err(CriteriaError::TooFewSamples { needed: 3, got: n });
    }
    let grid_ok = st_grid.first() == Some(&0.0)
        && st_grid.windows(2).all(|w| w[1] > w[0])
        && st_grid.iter().all(|t| t.is_finite());
    if !grid_ok {
        return Err(CriteriaError::DegenerateGrid);
    }

    struct Pair {
        gap: f64,
        weight: f64,
        signed: f64,
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (target[i] - target[j]).abs();
            if gap == 0.0 {
                continue;
            }
            let weight = weighting.weight(target[i], target[j]);
            let agree = (pred[i] - pred[j]).signum() * (target[i] - target[j]).signum();
            let signed = if pred[i] == pred[j] { 0.0 } else { agree * weight };
            pairs.push(Pair { gap, weight, signed });
        }
    }
    pairs.sort_by(|a, b| b.gap.total_cmp(&a.gap));

    // Sweep thresholds from the largest down, admitting pairs with gap > T.
    let mut sa = vec![0.0; st_grid.len()];
    let (mut num, mut den) = (0.0, 0.0);
    let mut next = 0;
    for (k, &t) in st_grid.iter().enumerate().rev() {
        while next < pairs.len() && pairs[next].gap > t {
            num += pairs[next].signed;
            den += pairs[next].weight;
            next += 1;
        }
        sa[k] = if den > 0.0 { (num / den).clamp(-1.0, 1.0) } else { 0.0 };
    }
    Ok(SaStCurve {
        thresholds: st_grid.to_vec(),
        sa,
    })
}

/// Trapezoidal area under the SA-ST curve.
pub fn pwrc_auc(curve: &SaStCurve) -> f64 {
    curve
        .thresholds
        .windows(2)
        .zip(curve.sa.windows(2))
        .map(|(t, s)| 0.5 * (t[1] - t[0]) * (s[0] + s[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub metric: String,
    pub variant: Variant,
    pub range: FidelityRange,
    pub n: usize,
    pub plcc: f64,
    pub srocc: f64,
    pub kt: f64,
    pub rmse: f64,
    pub z_rmse: f64,
    pub llr: f64,
    pub outlier_ratio: f64,
    pub pwrc_auc: f64,
}

/// Evaluation options shared by every metric in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriteriaOptions {
    pub outlier_z: f64,
    pub weighting: PwrcWeighting,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self {
            outlier_z: DEFAULT_OUTLIER_Z,
            weighting: PwrcWeighting::default(),
        }
    }
}

/// One metric joined over the whole dataset with its globally fitted
/// transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMetric {
    pub metric: String,
    pub variant: Variant,
    pub polarity: Polarity,
    pub series: PairedSeries,
    /// Raw scores with `+inf` sentinels clamped, as used for fitting.
    pub fit_scores: Vec<f64>,
    pub params: LogisticParams,
    /// Transformed scores on the JND scale.
    pub predictions: Vec<f64>,
}

impl PreparedMetric {
    /// Joins `(metric, variant)` on the full dataset and fits the transform
    /// there; slices reuse the same parameters.
    pub fn prepare(ds: &SubjectiveDataset, table: &MetricScoreTable, metric: &str, variant: Variant) -> std::result::Result<Self, EvalError> {
        let series = ds.join(table, metric, variant)?;
        let polarity = table
            .polarity(metric)
            .ok_or_else(|| crate::dataset::DatasetError::MissingPolarity(metric.to_string()))?;
        let (fit_scores, _) = clamp_sentinels(&series.scores)?;
        let params = fit_logistic(&series.scores, &series.jnd_mean)?;
        let predictions = params.apply_all(&fit_scores);
        Ok(Self {
            metric: metric.to_string(),
            variant,
            polarity,
            series,
            fit_scores,
            params,
            predictions,
        })
    }

    /// Raw scores flipped so that larger means more impaired.
    pub fn oriented_scores(&self) -> Vec<f64> {
        let s = self.polarity.impairment_sign();
        self.fit_scores.iter().map(|v| s * v).collect()
    }

    /// `|S_trans - S_subj|` per stimulus.
    pub fn abs_residuals(&self) -> Vec<f64> {
        self.predictions
            .iter()
            .zip(&self.series.jnd_mean)
            .map(|(p, t)| (p - t).abs())
            .collect()
    }

    pub fn report(&self, range: FidelityRange, options: &CriteriaOptions) -> std::result::Result<CriteriaReport, EvalError> {
        let idx = self.series.indices_in(range);
        if idx.is_empty() {
            return Err(crate::dataset::DatasetError::EmptySlice(range).into());
        }
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let oriented = pick(&self.oriented_scores());
        let pred = pick(&self.predictions);
        let target = pick(&self.series.jnd_mean);
        let sigma = pick(&self.series.jnd_std);
        let grid = default_st_grid(&target)?;
        let curve = pwrc_curve(&pred, &target, &grid, options.weighting)?;
        Ok(CriteriaReport {
            metric: self.metric.clone(),
            variant: self.variant,
            range,
            n: idx.len(),
            plcc: plcc(&pred, &target)?,
            srocc: srocc(&oriented, &target)?,
            kt: kendall_tau(&oriented, &target)?,
            rmse: rmse(&pred, &target)?,
            z_rmse: z_rmse(&pred, &target, &sigma)?,
            llr: llr(&pred, &target, &sigma)?,
            outlier_ratio: outlier_ratio(&pred, &target, &sigma, options.outlier_z)?,
            pwrc_auc: pwrc_auc(&curve),
        })
    }

    pub fn sa_st_curve(&self, range: FidelityRange, weighting: PwrcWeighting) -> std::result::Result<SaStCurve, EvalError> {
        let sub = self.slice(range);
        let grid = default_st_grid(&sub.1)?;
        Ok(pwrc_curve(&sub.0, &sub.1, &grid, weighting)?)
    }

    fn slice(&self, range: FidelityRange) -> (Vec<f64>, Vec<f64>) {
        let idx = self.series.indices_in(range);
        (
            idx.iter().map(|&i| self.predictions[i]).collect(),
            idx.iter().map(|&i| self.series.jnd_mean[i]).collect(),
        )
    }
}

/// Fits the transform on the whole dataset and reports the criteria on
/// `range`.
pub fn criteria_report(
    ds: &SubjectiveDataset,
    table: &MetricScoreTable,
    metric: &str,
    variant: Variant,
    range: FidelityRange,
) -> std::result::Result<CriteriaReport, EvalError> {
    PreparedMetric::prepare(ds, table, metric, variant)?.report(range, &CriteriaOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn correlation_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert!(close(plcc(&x, &y).unwrap(), 0.8, 1e-12));
        assert!(close(srocc(&x, &y).unwrap(), 0.8, 1e-12));
        assert!(close(kendall_tau(&x, &y).unwrap(), 4.0 / 6.0, 1e-12));
        let aff: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!(close(plcc(&x, &aff).unwrap(), 1.0, 1e-12));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(close(plcc(&x, &neg).unwrap(), -1.0, 1e-12));
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        let cubes: Vec<f64> = x.iter().map(|v| v * v * v + 5.0).collect();
        assert!(close(srocc(&x, &cubes).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn correlation_errors() {
        assert_eq!(plcc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(CriteriaError::ConstantSeries));
        assert_eq!(srocc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(CriteriaError::ConstantSeries));
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), Err(CriteriaError::ConstantSeries));
        assert!(matches!(plcc(&[1.0, 2.0], &[1.0, 2.0]), Err(CriteriaError::TooFewSamples { .. })));
    }

    #[test]
    fn error_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(close(rmse(&[3.0, -4.0], &[0.0, 0.0]).unwrap(), (12.5f64).sqrt(), 1e-15));
        assert_eq!(z_rmse(&[1.0], &[0.0], &[0.5]).unwrap(), 2.0);
        assert_eq!(llr(&[1.0, 2.0], &[0.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(llr(&[1.0, 2.0], &[1.0, 2.0], &[0.3, 1.0]).unwrap(), 0.0);
        assert_eq!(
            outlier_ratio(&[0.1, 0.5], &[0.0, 0.0], &[0.1, 0.1], DEFAULT_OUTLIER_Z).unwrap(),
            0.5
        );
        assert_eq!(outlier_ratio(&[1.0], &[1.0], &[0.1], 1.96).unwrap(), 0.0);
        assert_eq!(z_rmse(&[1.0], &[0.0], &[0.0]), Err(CriteriaError::NonPositiveSigma(0)));
        assert!(matches!(llr(&[1.0], &[0.0], &[-1.0]), Err(CriteriaError::NonPositiveSigma(0))));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(CriteriaError::LengthMismatch(1, 2))));
    }

    #[test]
    fn pwrc_examples() {
        let t = [0.0, 0.5, 1.0, 2.0, 3.0];
        let grid = default_st_grid(&t).unwrap();
        assert_eq!(grid.len(), DEFAULT_ST_STEPS + 1);
        let curve = pwrc_curve(&t, &t, &grid, PwrcWeighting::default()).unwrap();
        for (thr, sa) in curve.thresholds.iter().zip(&curve.sa) {
            if *thr < 3.0 {
                assert!(close(*sa, 1.0, 1e-15));
            } else {
                assert_eq!(*sa, 0.0);
            }
        }
        let beyond = pwrc_curve(&t, &t, &[0.0, 10.0], PwrcWeighting::Uniform).unwrap();
        assert_eq!(beyond.sa[1], 0.0);
        assert!(pwrc_curve(&t, &t, &[0.1, 1.0], PwrcWeighting::Uniform).is_err());
        assert!(pwrc_curve(&t, &t, &[0.0, 1.0, 1.0], PwrcWeighting::Uniform).is_err());

        let ones = SaStCurve {
            thresholds: (0..=6).map(f64::from).collect(),
            sa: vec![1.0; 7],
        };
        assert_eq!(pwrc_auc(&ones), 6.0);
        let zeros = SaStCurve { sa: vec![0.0; 7], ..ones.clone() };
        assert_eq!(pwrc_auc(&zeros), 0.0);
        let tri = SaStCurve {
            thresholds: vec![0.0, 1.0],
            sa: vec![1.0, 0.0],
        };
        assert_eq!(pwrc_auc(&tri), 0.5);
    }

    /// Exhaustive enumeration of the activated pairs for each threshold.
    fn pwrc_brute(pred: &[f64], target: &[f64], grid: &[f64], w: PwrcWeighting) -> Vec<f64> {
        grid.iter()
            .map(|&t| {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..pred.len() {
                    for j in 0..pred.len() {
                        if i >= j || (target[i] - target[j]).abs() <= t {
                            continue;
                        }
                        let wij = w.weight(target[i], target[j]);
                        den += wij;
                        let dp = pred[i] - pred[j];
                        let dt = target[i] - target[j];
                        if dp * dt > 0.0 {
                            num += wij;
                        } else if dp * dt < 0.0 {
                            num -= wij;
                        }
                    }
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn pwrc_four_point_enumeration() {
        let pred = [0.2, 1.4, 0.9, 2.5];
        let target = [0.1, 0.8, 1.2, 2.0];
        let grid = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0];
        let w = PwrcWeighting::default();
        let fast = pwrc_curve(&pred, &target, &grid, w).unwrap();
        let slow = pwrc_brute(&pred, &target, &grid, w);
        for (a, b) in fast.sa.iter().zip(&slow) {
            assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
        // 6 pairs at T = 0: one discordant pair (indices 1 and 2).
        let w12 = w.weight(0.8, 1.2);
        let total: f64 = [(0.1, 0.8), (0.1, 1.2), (0.1, 2.0), (0.8, 1.2), (0.8, 2.0), (1.2, 2.0)]
            .iter()
            .map(|&(a, b)| w.weight(a, b))
            .sum();
        assert!(close(fast.sa[0], (total - 2.0 * w12) / total, 1e-12));
    }

    /// O(n^2) pair count.
    fn kendall_brute(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut s, mut tx, mut ty) = (0i64, 0u64, 0u64);
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = x[i] - x[j];
                let dy = y[i] - y[j];
                if dx == 0.0 {
                    tx += 1;
                }
                if dy == 0.0 {
                    ty += 1;
                }
                if dx * dy > 0.0 {
                    s += 1;
                } else if dx * dy < 0.0 {
                    s -= 1;
                }
            }
        }
        let n0 = (n * (n - 1) / 2) as u64;
        tau_b_from_counts(s, n0 - tx, n0 - ty)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn kendall_matches_pair_count(v in prop::collection::vec((0i32..12, 0i32..12), 3..80)) {
            let x: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = v.iter().map(|p| p.1 as f64).collect();
            let fast = kendall_tau(&x, &y);
            let tx = x.iter().all(|a| *a == x[0]);
            let ty = y.iter().all(|a| *a == y[0]);
            if tx || ty {
                prop_assert!(fast.is_err());
            } else {
                prop_assert_eq!(fast.unwrap(), kendall_brute(&x, &y));
            }
        }

        #[test]
        fn rank_invariance(v in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60)) {
            let x: Vec<f64> = v.iter().map(|p| p.0).collect();
            let y: Vec<f64> = v.iter().map(|p| p.1).collect();
            prop_assume!(x.iter().any(|a| *a != x[0]) && y.iter().any(|a| *a != y[0]));
            let base = srocc(&x, &y).unwrap();
            let maps: [fn(f64) -> f64; 3] = [|a| a * a * a, |a| a.exp(), |a| 3.0 * a + 7.0];
            for f in maps {
                let fx: Vec<f64> = x.iter().map(|a| f(*a)).collect();
                prop_assert!((srocc(&fx, &y).unwrap() - base).abs() < 1e-12);
            }
            let ax: Vec<f64> = x.iter().map(|a| 2.5 * a - 4.0).collect();
            prop_assert!((plcc(&ax, &y).unwrap() - plcc(&x, &y).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn z_rmse_with_unit_sigma_is_rmse(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..50)) {
            let p: Vec<f64> = v.iter().map(|a| a.0).collect();
            let t: Vec<f64> = v.iter().map(|a| a.1).collect();
            let ones = vec![1.0; p.len()];
            prop_assert_eq!(z_rmse(&p, &t, &ones).unwrap(), rmse(&p, &t).unwrap());
        }

        #[test]
        fn outlier_ratio_monotone_in_z(v in prop::collection::vec((-2.0f64..2.0, 0.05f64..1.0), 1..50)) {
            let p: Vec<f64> = v.iter().map(|a| a.0).collect();
            let t = vec![0.0; p.len()];
            let s: Vec<f64> = v.iter().map(|a| a.1).collect();
            let mut last = f64::INFINITY;
            for z in [0.0, 0.5, 1.0, 1.96, 3.0] {
                let or = outlier_ratio(&p, &t, &s, z).unwrap();
                prop_assert!(or <= last);
                last = or;
            }
        }

        #[test]
        fn pwrc_bounds_and_reversal(v in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 3..40)) {
            let p: Vec<f64> = v.iter().map(|a| a.0).collect();
            let t: Vec<f64> = v.iter().map(|a| a.1).collect();
            let grid = match default_st_grid(&t) { Ok(g) => g, Err(_) => return Ok(()) };
            let w = PwrcWeighting::default();
            let c = pwrc_curve(&p, &t, &grid, w).unwrap();
            let rev: Vec<f64> = p.iter().map(|a| -a).collect();
            let r = pwrc_curve(&rev, &t, &grid, w).unwrap();
            let slow = pwrc_brute(&p, &t, &grid, w);
            for k in 0..grid.len() {
                prop_assert!((-1.0..=1.0).contains(&c.sa[k]));
                prop_assert!((c.sa[k] + r.sa[k]).abs() < 1e-12);
                prop_assert!((c.sa[k] - slow[k]).abs() < 1e-12);
            }
        }
    }
}
