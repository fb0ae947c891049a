//! Synthetic JND datasets with known ground truth.
//!
//! Impairment follows an exponential rate-distortion curve passed through a
//! quadratic boosting map. Subjective deviations grow with impairment, and
//! synthetic metrics are logistic-inverse functions of a noisy copy of the
//! true impairment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{MetricScoreTable, Polarity, ScoreRow, StimulusRecord, SubjectiveDataset, Variant};
use crate::transform::LogisticParams;

/// `Phi^-1(0.75)`: a 1 JND gap is identified correctly 75 % of the time.
pub const THURSTONE_SCALE: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDistortionModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl RateDistortionModel {
    pub fn distortion(&self, rate: f64) -> f64 {
        self.alpha * (-self.beta * rate).exp()
    }
}

pub fn rd_curve(model: &RateDistortionModel, rates: &[f64]) -> Vec<f64> {
    rates.iter().map(|r| model.distortion(*r)).collect()
}

pub fn boost_map(model: &RateDistortionModel, d: f64) -> f64 {
    model.gamma1 * d + model.gamma2 * d * d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairChoice {
    First,
    Second,
}

/// Probability that the first stimulus is picked as the more impaired one.
pub fn choice_probability(d_i: f64, d_j: f64) -> f64 {
    crate::stats::normal_cdf(THURSTONE_SCALE * (d_i - d_j))
}

pub fn sample_pair_choice<R: Rng + ?Sized>(d_i: f64, d_j: f64, rng: &mut R) -> PairChoice {
    if rng.random::<f64>() < choice_probability(d_i, d_j) {
        PairChoice::First
    } else {
        PairChoice::Second
    }
}

/// `sigma(d) = base + slope * d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaProfile {
    pub base: f64,
    pub slope: f64,
}

impl Default for SigmaProfile {
    fn default() -> Self {
        Self { base: 0.05, slope: 0.08 }
    }
}

impl SigmaProfile {
    pub fn at(&self, d: f64) -> f64 {
        self.base + self.slope * d
    }
}

/// A synthetic metric: the true impairment plus Gaussian noise of standard
/// deviation `noise_base + noise_slope * d`, mapped to a raw score by the
/// inverse of `link`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub name: String,
    #[serde(default)]
    pub noise_base: f64,
    #[serde(default)]
    pub noise_slope: f64,
    /// Multiplier on the noise of the full-resolution variant.
    #[serde(default = "one")]
    pub full_noise_factor: f64,
    pub polarity: Polarity,
    /// Logistic the raw score is the preimage of. `b4` is sign-adjusted to
    /// the polarity.
    #[serde(default = "default_link")]
    pub link: [f64; 4],
}

fn one() -> f64 {
    1.0
}

fn default_link() -> [f64; 4] {
    [8.0, -1.0, 0.0, 1.0]
}

impl PredictorSpec {
    pub fn new(name: &str, noise_base: f64, noise_slope: f64, polarity: Polarity) -> Self {
        Self {
            name: name.to_string(),
            noise_base,
            noise_slope,
            full_noise_factor: 1.0,
            polarity,
            link: default_link(),
        }
    }

    fn link_params(&self) -> LogisticParams {
        let [b1, b2, b3, b4] = self.link;
        // Higher-is-better scores fall as impairment grows.
        let b4 = match self.polarity {
            Polarity::HigherIsBetter => -b4.abs(),
            Polarity::LowerIsBetter => b4.abs(),
        };
        LogisticParams::new(b1, b2, b3, b4)
    }

    /// Raw score whose logistic image is `d`, with `d` kept inside the
    /// open range of the link.
    pub fn raw_score(&self, d: f64) -> f64 {
        let p = self.link_params();
        let span = p.b1 - p.b2;
        let margin = 1e-6 * span;
        let d = d.clamp(p.b2 + margin, p.b1 - margin);
        p.b3 - p.b4 * (span / (d - p.b2) - 1.0).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub name: String,
    pub seed: u64,
    pub sources: usize,
    pub codecs: usize,
    pub levels: usize,
    /// Bitrates spanned by the distortion levels, highest level = lowest rate.
    pub rate_range: [f64; 2],
    /// Per (source, codec) curves draw `alpha` and `beta` uniformly here.
    pub alpha_range: [f64; 2],
    pub beta_range: [f64; 2],
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma: SigmaProfile,
    pub predictors: Vec<PredictorSpec>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".to_string(),
            seed: 0,
            sources: 5,
            codecs: 6,
            levels: 10,
            rate_range: [0.25, 4.0],
            alpha_range: [2.5, 4.5],
            beta_range: [0.4, 0.9],
            gamma1: 1.0,
            gamma2: 0.0,
            sigma: SigmaProfile::default(),
            predictors: vec![
                PredictorSpec::new("oracle", 0.0, 0.0, Polarity::HigherIsBetter),
                PredictorSpec::new("quiet", 0.05, 0.0, Polarity::LowerIsBetter),
                PredictorSpec::new("noisy", 0.5, 0.0, Polarity::HigherIsBetter),
                PredictorSpec::new("hetero", 0.1, 0.05, Polarity::HigherIsBetter),
            ],
        }
    }
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        serde_json::from_str(text).map_err(|e| SynthError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.sources == 0 || self.codecs == 0 || self.levels == 0 {
            return bad("sources, codecs and levels must be at least 1");
        }
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ordered(self.rate_range) || self.rate_range[0] < 0.0 {
            return bad("rate_range must be an ordered pair of non-negative rates");
        }
        if !ordered(self.alpha_range) || self.alpha_range[0] <= 0.0 {
            return bad("alpha_range must be an ordered pair of positive values");
        }
        if !ordered(self.beta_range) || self.beta_range[0] <= 0.0 {
            return bad("beta_range must be an ordered pair of positive values");
        }
        if !(self.gamma1 > 0.0) || !(self.gamma2 >= 0.0) {
            return bad("boosting map needs gamma1 > 0 and gamma2 >= 0");
        }
        if !(self.sigma.base > 0.0) || !(self.sigma.slope >= 0.0) {
            return bad("sigma profile needs base > 0 and slope >= 0");
        }
        let mut names = std::collections::HashSet::new();
        for p in &self.predictors {
            if p.name.is_empty() || !names.insert(p.name.as_str()) {
                return bad("predictor names must be non-empty and unique");
            }
            let noise_ok = [p.noise_base, p.noise_slope, p.full_noise_factor]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0);
            if !noise_ok {
                return bad("predictor noise terms must be non-negative");
            }
            let [b1, b2, _, b4] = p.link;
            if !(b1 > b2) || b4 == 0.0 || p.link.iter().any(|v| !v.is_finite()) {
                return bad("predictor link needs b1 > b2 and b4 != 0");
            }
        }
        Ok(())
    }

    pub fn stimulus_count(&self) -> usize {
        self.sources * self.codecs * self.levels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub dataset: SubjectiveDataset,
    pub scores: MetricScoreTable,
}

/// Draws the dataset and every predictor's crop and full scores from a
/// single ChaCha stream seeded by `config.seed`.
pub fn gen_dataset(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rates: Vec<f64> = (0..config.levels)
        .map(|k| {
            if config.levels == 1 {
                config.rate_range[1]
            } else {
                let t = k as f64 / (config.levels - 1) as f64;
                config.rate_range[1] + (config.rate_range[0] - config.rate_range[1]) * t
            }
        })
        .collect();

    let mut records = Vec::with_capacity(config.stimulus_count());
    for s in 0..config.sources {
        for c in 0..config.codecs {
            let model = RateDistortionModel {
                alpha: uniform(&mut rng, config.alpha_range),
                beta: uniform(&mut rng, config.beta_range),
                gamma1: config.gamma1,
                gamma2: config.gamma2,
            };
            for (level, d) in rd_curve(&model, &rates).into_iter().enumerate() {
                let jnd = boost_map(&model, d);
                records.push(StimulusRecord {
                    stimulus_id: format!("SRC{:02}_C{}_L{:02}", s + 1, c + 1, level + 1),
                    source_id: format!("SRC{:02}", s + 1),
                    codec_id: format!("C{}", c + 1),
                    distortion_level: level as u32 + 1,
                    jnd_mean: jnd,
                    jnd_std: config.sigma.at(jnd),
                });
            }
        }
    }

    let mut scores = MetricScoreTable::new();
    for p in &config.predictors {
        scores.set_polarity(p.name.clone(), p.polarity);
        for r in &records {
            let sd = p.noise_base + p.noise_slope * r.jnd_mean;
            for (variant, factor) in [(Variant::Crop, 1.0), (Variant::Full, p.full_noise_factor)] {
                let e: f64 = rng.sample(StandardNormal);
                let row = ScoreRow {
                    metric: p.name.clone(),
                    variant,
                    stimulus_id: r.stimulus_id.clone(),
                    score: p.raw_score(r.jnd_mean + factor * sd * e),
                };
                scores.insert(row, 0)?;
            }
        }
    }

    Ok(SynthOutput {
        dataset: SubjectiveDataset::new(config.name.clone(), records)?,
        scores,
    })
}

fn uniform<R: Rng>(rng: &mut R, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(alpha: f64, beta: f64, gamma1: f64, gamma2: f64) -> RateDistortionModel {
        RateDistortionModel { alpha, beta, gamma1, gamma2 }
    }

    #[test]
    fn forward_model_examples() {
        let m = model(4.0, 0.5, 1.0, 0.1);
        assert_eq!(rd_curve(&m, &[0.0])[0], 4.0);
        assert!((m.distortion(2.0) - 4.0 * (-1f64).exp()).abs() < 1e-15);
        assert!((rd_curve(&m, &[2.0])[0] - 1.4715).abs() < 1e-4);
        // Doubling beta reaches the same distortion at half the rate.
        let fast = model(4.0, 1.0, 1.0, 0.0);
        assert!((fast.distortion(1.5) - m.distortion(3.0)).abs() < 1e-15);
        assert_eq!(boost_map(&m, 0.0), 0.0);
        assert!((boost_map(&m, 2.0) - 2.4).abs() < 1e-15);
        assert_eq!(boost_map(&model(1.0, 1.0, 1.0, 0.0), 1.7), 1.7);
    }

    #[test]
    fn choice_probabilities() {
        assert_eq!(choice_probability(1.0, 1.0), 0.5);
        assert!((choice_probability(2.0, 1.0) - 0.75).abs() < 1e-12);
        assert!(choice_probability(20.0, 0.0) > 0.999);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_pair_choice(1.5, 0.5, &mut rng) == PairChoice::First)
            .count();
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn raw_scores_invert_the_link() {
        for pol in [Polarity::HigherIsBetter, Polarity::LowerIsBetter] {
            let p = PredictorSpec::new("x", 0.0, 0.0, pol);
            let link = p.link_params();
            for d in [0.0, 0.3, 1.0, 2.5, 5.0] {
                assert!((link.apply(p.raw_score(d)) - d).abs() < 1e-12);
            }
            let (lo, hi) = (p.raw_score(0.5), p.raw_score(1.5));
            assert_eq!(hi > lo, pol == Polarity::LowerIsBetter);
        }
    }

    #[test]
    fn default_dataset_shape() {
        let out = gen_dataset(&SynthConfig::default()).unwrap();
        assert_eq!(out.dataset.len(), 300);
        assert_eq!(out.scores.len(), 300 * 4 * 2);
        for r in out.dataset.records() {
            assert!(r.jnd_mean >= 0.0);
            assert!(r.jnd_std > 0.0);
        }
        // Impairment falls as the rate rises within each curve.
        for chunk in out.dataset.records().chunks(10) {
            assert!(chunk.windows(2).all(|w| w[1].jnd_mean > w[0].jnd_mean));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SynthConfig { seed: 7, ..Default::default() };
        assert_eq!(gen_dataset(&cfg).unwrap(), gen_dataset(&cfg).unwrap());
        let other = SynthConfig { seed: 8, ..Default::default() };
        assert_ne!(gen_dataset(&cfg).unwrap(), gen_dataset(&other).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SynthConfig::default();
        cfg.sigma.base = 0.0;
        assert!(matches!(gen_dataset(&cfg), Err(SynthError::InvalidConfig(_))));
        let mut cfg = SynthConfig::default();
        cfg.predictors.push(PredictorSpec::new("quiet", 0.1, 0.0, Polarity::LowerIsBetter));
        assert!(cfg.validate().is_err());
        let parsed = SynthConfig::from_json(r#"{"seed": 3, "levels": 4}"#).unwrap();
        assert_eq!(parsed.seed, 3);
        assert_eq!(parsed.stimulus_count(), 120);
        assert!(SynthConfig::from_json(r#"{"levels": "x"}"#).is_err());
    }
}
