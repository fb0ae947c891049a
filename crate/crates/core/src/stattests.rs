//! Pairwise significance tests between metrics: the Meng-Rosenthal-Rubin
//! test on dependent SROCCs and the Wilcoxon signed-rank test on absolute
//! residuals of the transformed scores.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, PreparedMetric};
use crate::dataset::{DatasetError, FidelityRange, MetricScoreTable, SubjectiveDataset, Variant};
use crate::stats;
use crate::transform::{clamp_sentinels, fit_logistic_joint, LogisticParams};
use crate::EvalError;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatTestError {
    #[error("MRR needs at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("correlation {0} has no finite Fisher transform")]
    DegenerateFisher(f64),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("metrics `{0}` and `{1}` are not aligned on the same stimuli")]
    Misaligned(String, String),
    #[error("significance matrix is not antisymmetric at ({0}, {1})")]
    NotAntisymmetric(usize, usize),
}

/// Outcome of a pairwise comparison from the point of view of metric A.
pub type Decision = i8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrrResult {
    pub r1s: f64,
    pub r2s: f64,
    pub r12: f64,
    pub n: usize,
    pub z1: f64,
    pub z2: f64,
    pub rbar_sq: f64,
    pub f: f64,
    pub h: f64,
    pub z_stat: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
}

/// MRR test on SROCCs of two metrics against the same subjective scores.
///
/// Scores must already be oriented so that a positive correlation with
/// `subj` means agreement.
pub fn mrr_test(scores_a: &[f64], scores_b: &[f64], subj: &[f64], alpha: f64) -> Result<MrrResult, EvalError> {
    let r1s = criteria::srocc(scores_a, subj)?;
    let r2s = criteria::srocc(scores_b, subj)?;
    let r12 = criteria::srocc(scores_a, scores_b)?;
    Ok(mrr_from_correlations(r1s, r2s, r12, subj.len(), alpha)?)
}

pub fn mrr_from_correlations(r1s: f64, r2s: f64, r12: f64, n: usize, alpha: f64) -> Result<MrrResult, StatTestError> {
    if n < 4 {
        return Err(StatTestError::TooFewSamples(n));
    }
    // Equal correlations carry no evidence either way, even at |r| = 1.
    for r in [r1s, r2s] {
        if !(r.abs() < 1.0) && r1s != r2s {
            return Err(StatTestError::DegenerateFisher(r));
        }
    }
    let z1 = r1s.atanh();
    let z2 = r2s.atanh();
    let rbar_sq = 0.5 * (r1s * r1s + r2s * r2s);
    // f cannot exceed 1 (Meng, Rosenthal and Rubin, 1992); the cap only
    // binds when r12 is small relative to the criterion correlations.
    let f = ((1.0 - r12) / (2.0 * (1.0 - rbar_sq))).min(1.0);
    let h = if r1s == r2s && rbar_sq == 1.0 {
        1.0
    } else {
        (1.0 - f * rbar_sq) / (1.0 - rbar_sq)
    };
    let scale = 2.0 * (1.0 - r12) * h / (n as f64 - 3.0);
    let z_stat = if z1 == z2 {
        0.0
    } else if scale > 0.0 {
        (z1 - z2) / scale.sqrt()
    } else {
        // r12 = 1 with distinct criterion correlations cannot happen for
        // rank correlations; keep the sign of the difference.
        (z1 - z2).signum() * f64::INFINITY
    };
    let p_value = stats::two_tailed_p(z_stat);
    let decision = if p_value < alpha {
        z_stat.signum() as Decision
    } else {
        0
    };
    Ok(MrrResult {
        r1s,
        r2s,
        r12,
        n,
        z1,
        z2,
        rbar_sq,
        f,
        h,
        z_stat,
        p_value,
        alpha,
        decision,
    })
}

/// Threshold the Wilcoxon p-value is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    Alpha,
    /// The published rule: significant when `p < |r|`, `r` the effect size.
    EffectSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonConfig {
    pub alpha: f64,
    pub use_paper_threshold: bool,
    /// Shift `|W - mu|` by 0.5 towards zero before standardising.
    pub continuity_correction: bool,
}

impl Default for WilcoxonConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            use_paper_threshold: false,
            continuity_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_total: usize,
    pub n_nonzero: usize,
    pub w_stat: f64,
    pub mu_w: f64,
    pub sigma_w: f64,
    pub z_stat: f64,
    pub p_value: f64,
    pub effect_size_r: f64,
    pub median_resid_a: f64,
    pub median_resid_b: f64,
    pub policy: ThresholdPolicy,
    pub threshold: f64,
    pub continuity_correction: bool,
    /// Every difference was zero; the test carries no information.
    pub degenerate: bool,
    pub decision: Decision,
}

/// Paired signed-rank test on `d = resid_a - resid_b`.
pub fn wilcoxon_test(resid_a: &[f64], resid_b: &[f64], config: &WilcoxonConfig) -> Result<WilcoxonResult, StatTestError> {
    if resid_a.len() != resid_b.len() {
        return Err(StatTestError::LengthMismatch(resid_a.len(), resid_b.len()));
    }
    let n_total = resid_a.len();
    let d: Vec<f64> = resid_a
        .iter()
        .zip(resid_b)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = d.len();
    let policy = if config.use_paper_threshold {
        ThresholdPolicy::EffectSize
    } else {
        ThresholdPolicy::Alpha
    };
    let (median_resid_a, median_resid_b) = if n_total == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (stats::median(resid_a), stats::median(resid_b))
    };

    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = stats::fractional_ranks(&abs);
    let w_stat: f64 = ranks.iter().zip(&d).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let nf = n as f64;
    // The published mean n(n+1)/2 is the maximum of W; the null mean of the
    // positive-rank sum is half of it.
    let mu_w = nf * (nf + 1.0) / 4.0;
    let sigma_w = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();

    let degenerate = n == 0;
    let z_stat = if degenerate {
        0.0
    } else {
        let dev = w_stat - mu_w;
        let mag = if config.continuity_correction {
            (dev.abs() - 0.5).max(0.0)
        } else {
            dev.abs()
        };
        dev.signum() * mag / sigma_w
    };
    let p_value = stats::two_tailed_p(z_stat);
    let effect_size_r = if n_total == 0 { 0.0 } else { z_stat / (n_total as f64).sqrt() };
    let threshold = match policy {
        ThresholdPolicy::Alpha => config.alpha,
        ThresholdPolicy::EffectSize => effect_size_r.abs(),
    };

    let decision = if degenerate || !(p_value < threshold) {
        0
    } else if median_resid_a < median_resid_b {
        1
    } else if median_resid_a > median_resid_b {
        -1
    } else {
        // Equal medians: fall back to the direction of the signed ranks so
        // that swapping A and B still negates the outcome.
        -(z_stat.signum() as Decision)
    };

    Ok(WilcoxonResult {
        n_total,
        n_nonzero: n,
        w_stat,
        mu_w,
        sigma_w,
        z_stat,
        p_value,
        effect_size_r,
        median_resid_a,
        median_resid_b,
        policy,
        threshold,
        continuity_correction: config.continuity_correction,
        degenerate,
        decision,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Mrr,
    Wilcoxon,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Mrr => "mrr",
            TestKind::Wilcoxon => "wilcoxon",
        }
    }
}

/// Pairwise outcomes; `cells[i][j]` is the decision for the column metric
/// `j` against the row metric `i` (+1: column significantly better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub test: TestKind,
    pub range: FidelityRange,
    pub metrics: Vec<String>,
    pub cells: Vec<Vec<Decision>>,
}

impl SignificanceMatrix {
    pub fn validate(&self) -> Result<(), StatTestError> {
        for i in 0..self.cells.len() {
            for j in 0..self.cells.len() {
                if self.cells[i][j] != -self.cells[j][i] {
                    return Err(StatTestError::NotAntisymmetric(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (m, row) in self.metrics.iter().zip(&self.cells) {
            out.push_str(m);
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    /// `+` column better, `-` column worse, `.` no significant difference.
    pub fn render_text(&self) -> String {
        let width = self.metrics.iter().map(String::len).max().unwrap_or(0);
        let mut out = String::new();
        for (k, m) in self.metrics.iter().enumerate() {
            out.push_str(&format!("{:>w$} {:>3} ", m, k + 1, w = width));
            for c in &self.cells[k] {
                out.push(match c {
                    1 => '+',
                    -1 => '-',
                    _ => '.',
                });
            }
            out.push('\n');
        }
        out
    }
}

fn check_aligned(a: &PreparedMetric, b: &PreparedMetric) -> Result<(), StatTestError> {
    if a.series.stimulus_ids != b.series.stimulus_ids {
        return Err(StatTestError::Misaligned(a.metric.clone(), b.metric.clone()));
    }
    Ok(())
}

fn pick(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Decision of `a` against `b` on `range`.
pub fn pairwise_decision(
    a: &PreparedMetric,
    b: &PreparedMetric,
    range: FidelityRange,
    test: TestKind,
    config: &WilcoxonConfig,
) -> Result<Decision, EvalError> {
    check_aligned(a, b)?;
    let idx = a.series.indices_in(range);
    Ok(match test {
        TestKind::Mrr => {
            let subj = pick(&a.series.jnd_mean, &idx);
            mrr_test(
                &pick(&a.oriented_scores(), &idx),
                &pick(&b.oriented_scores(), &idx),
                &subj,
                config.alpha,
            )?
            .decision
        }
        TestKind::Wilcoxon => {
            wilcoxon_test(&pick(&a.abs_residuals(), &idx), &pick(&b.abs_residuals(), &idx), config)?.decision
        }
    })
}

/// Builds the full matrix ordered by descending SROCC on `range`.
///
/// Every off-diagonal cell is computed on its own, and the result is checked
/// for antisymmetry before it is returned.
pub fn significance_matrix(
    metrics: &[PreparedMetric],
    range: FidelityRange,
    test: TestKind,
    config: &WilcoxonConfig,
) -> Result<SignificanceMatrix, EvalError> {
    let mut keyed = Vec::with_capacity(metrics.len());
    for m in metrics {
        let idx = m.series.indices_in(range);
        if idx.is_empty() {
            return Err(DatasetError::EmptySlice(range).into());
        }
        let s = criteria::srocc(&pick(&m.oriented_scores(), &idx), &pick(&m.series.jnd_mean, &idx))?;
        keyed.push((s, m));
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.metric.cmp(&b.1.metric)));
    let order: Vec<&PreparedMetric> = keyed.into_iter().map(|(_, m)| m).collect();
    let k = order.len();

    let cells: Vec<Vec<Decision>> = (0..k)
        .into_par_iter()
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        Ok(0)
                    } else {
                        pairwise_decision(order[j], order[i], range, test, config)
                    }
                })
                .collect::<Result<Vec<_>, EvalError>>()
        })
        .collect::<Result<_, _>>()?;

    let matrix = SignificanceMatrix {
        test,
        range,
        metrics: order.iter().map(|m| m.metric.clone()).collect(),
        cells,
    };
    matrix.validate()?;
    Ok(matrix)
}

/// Per-variant summary under the shared (joint) transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantScores {
    pub plcc: f64,
    pub srocc: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub metric: String,
    pub range: FidelityRange,
    pub params: LogisticParams,
    /// Crop is metric A.
    pub mrr: MrrResult,
    pub wilcoxon: WilcoxonResult,
    pub crop: VariantScores,
    pub full: VariantScores,
}

impl VariantComparison {
    pub fn significant(&self) -> bool {
        self.mrr.decision != 0 || self.wilcoxon.decision != 0
    }
}

/// Crop versus full-resolution scores of one metric, with a single logistic
/// transform fitted on both variants together.
pub fn compare_variants(
    ds: &SubjectiveDataset,
    table: &MetricScoreTable,
    metric: &str,
    range: FidelityRange,
    config: &WilcoxonConfig,
) -> Result<VariantComparison, EvalError> {
    let crop = ds.join(table, metric, Variant::Crop)?;
    let full = ds.join(table, metric, Variant::Full)?;
    let polarity = table
        .polarity(metric)
        .ok_or_else(|| DatasetError::MissingPolarity(metric.to_string()))?;
    let params = fit_logistic_joint(&full, &crop)?;
    let (crop_s, _) = clamp_sentinels(&crop.scores)?;
    let (full_s, _) = clamp_sentinels(&full.scores)?;

    let idx = crop.indices_in(range);
    if idx.is_empty() {
        return Err(DatasetError::EmptySlice(range).into());
    }
    let sign = polarity.impairment_sign();
    let subj = pick(&crop.jnd_mean, &idx);
    let orient = |v: &[f64]| pick(v, &idx).into_iter().map(|x| sign * x).collect::<Vec<_>>();
    let (crop_o, full_o) = (orient(&crop_s), orient(&full_s));
    let crop_p = params.apply_all(&pick(&crop_s, &idx));
    let full_p = params.apply_all(&pick(&full_s, &idx));
    let resid = |p: &[f64]| p.iter().zip(&subj).map(|(p, t)| (p - t).abs()).collect::<Vec<_>>();

    let mrr = mrr_test(&crop_o, &full_o, &subj, config.alpha)?;
    let wilcoxon = wilcoxon_test(&resid(&crop_p), &resid(&full_p), config)?;
    let summary = |pred: &[f64], oriented: &[f64]| -> Result<VariantScores, EvalError> {
        Ok(VariantScores {
            plcc: criteria::plcc(pred, &subj)?,
            srocc: criteria::srocc(oriented, &subj)?,
            rmse: criteria::rmse(pred, &subj)?,
        })
    };
    Ok(VariantComparison {
        metric: metric.to_string(),
        range,
        params,
        crop: summary(&crop_p, &crop_o)?,
        full: summary(&full_p, &full_o)?,
        mrr,
        wilcoxon,
    })
}
