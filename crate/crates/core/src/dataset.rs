//! Subjective datasets, metric score tables and the joins between them.
//!
//! Subjective data is one row per compressed stimulus carrying the JND-scale
//! mean and standard deviation. Metric scores are long-format rows
//! `(metric, variant, stimulus_id, score)`; every metric must have a declared
//! polarity before it can be evaluated.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Boundary between the high- and medium-fidelity ranges, in JND units.
pub const FIDELITY_BOUNDARY_JND: f64 = 1.0;

pub const SUBJECTIVE_HEADER: [&str; 6] = [
    "stimulus_id",
    "source_id",
    "codec_id",
    "distortion_level",
    "jnd_mean",
    "jnd_std",
];

pub const SCORES_HEADER: [&str; 4] = ["metric", "variant", "stimulus_id", "score"];

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("polarity config is not valid JSON: {0}")]
    PolarityJson(#[from] serde_json::Error),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("row {row}: field `{field}` has invalid value `{value}`")]
    InvalidField {
        row: usize,
        field: String,
        value: String,
    },
    #[error("row {row}: duplicate stimulus `{id}`")]
    DuplicateStimulus { id: String, row: usize },
    #[error("row {row}: jnd_std must be > 0, got {value}")]
    NonPositiveSigma { row: usize, value: f64 },
    #[error("row {row}: jnd_mean must be finite and >= 0, got {value}")]
    InvalidMean { row: usize, value: f64 },
    #[error("row {row}: duplicate score for ({metric}, {variant}, {stimulus})")]
    DuplicateScore {
        metric: String,
        variant: Variant,
        stimulus: String,
        row: usize,
    },
    #[error("row {row}: non-finite score for metric `{metric}`")]
    NonFiniteScore { metric: String, row: usize },
    #[error("no polarity declared for metric `{0}`")]
    MissingPolarity(String),
    #[error("table or dataset is empty")]
    EmptyTable,
    #[error("fidelity range {0} selects no stimuli")]
    EmptySlice(FidelityRange),
    #[error("metric `{metric}` ({variant}) has no score for stimulus `{stimulus}`")]
    MissingScore {
        metric: String,
        variant: Variant,
        stimulus: String,
    },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// One compressed image with its JND-scale subjective statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub stimulus_id: String,
    pub source_id: String,
    pub codec_id: String,
    pub distortion_level: u32,
    pub jnd_mean: f64,
    pub jnd_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectiveDataset {
    name: String,
    records: Vec<StimulusRecord>,
}

impl SubjectiveDataset {
    /// Validates uniqueness, `jnd_std > 0` and `jnd_mean >= 0`.
    pub fn new(name: impl Into<String>, records: Vec<StimulusRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            // Row numbers are 1-based file lines, the header being line 1.
            let row = i + 2;
            if !seen.insert(r.stimulus_id.as_str()) {
                return Err(DatasetError::DuplicateStimulus {
                    id: r.stimulus_id.clone(),
                    row,
                });
            }
            if !(r.jnd_std > 0.0) || !r.jnd_std.is_finite() {
                return Err(DatasetError::NonPositiveSigma {
                    row,
                    value: r.jnd_std,
                });
            }
            if !(r.jnd_mean >= 0.0) || !r.jnd_mean.is_finite() {
                return Err(DatasetError::InvalidMean {
                    row,
                    value: r.jnd_mean,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            records,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn records(&self) -> &[StimulusRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn jnd_means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.jnd_mean).collect()
    }

    pub fn filter_by_fidelity(&self, range: FidelityRange) -> Result<Self> {
        let records: Vec<_> = self
            .records
            .iter()
            .filter(|r| range.contains(r.jnd_mean))
            .cloned()
            .collect();
        if records.is_empty() {
            return Err(DatasetError::EmptySlice(range));
        }
        Ok(Self {
            name: self.name.clone(),
            records,
        })
    }

    /// Aligns the scores of one `(metric, variant)` slice with the records, in
    /// dataset order.
    pub fn join(&self, table: &MetricScoreTable, metric: &str, variant: Variant) -> Result<PairedSeries> {
        let mut out = PairedSeries::with_capacity(self.records.len());
        for r in &self.records {
            let score = table.score(metric, variant, &r.stimulus_id).ok_or_else(|| {
                DatasetError::MissingScore {
                    metric: metric.to_string(),
                    variant,
                    stimulus: r.stimulus_id.clone(),
                }
            })?;
            out.push(&r.stimulus_id, score, r.jnd_mean, r.jnd_std);
        }
        Ok(out)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read_csv(name, file)
    }

    pub fn read_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols = column_indices(&headers, &SUBJECTIVE_HEADER)?;
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let get = |k: usize| row.get(cols[k]).unwrap_or("");
            records.push(StimulusRecord {
                stimulus_id: get(0).to_string(),
                source_id: get(1).to_string(),
                codec_id: get(2).to_string(),
                distortion_level: parse_field(get(3), "distortion_level", line)?,
                jnd_mean: parse_field(get(4), "jnd_mean", line)?,
                jnd_std: parse_field(get(5), "jnd_std", line)?,
            });
            if records.last().is_some_and(|r| r.distortion_level < 1) {
                return Err(DatasetError::InvalidField {
                    row: line,
                    field: "distortion_level".into(),
                    value: get(3).to_string(),
                });
            }
        }
        Self::new(name, records)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(SUBJECTIVE_HEADER)?;
        for r in &self.records {
            wtr.write_record([
                r.stimulus_id.clone(),
                r.source_id.clone(),
                r.codec_id.clone(),
                r.distortion_level.to_string(),
                format_score(r.jnd_mean),
                format_score(r.jnd_std),
            ])?;
        }
        wtr.flush().map_err(|source| DatasetError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

fn column_indices<const N: usize>(headers: &csv::StringRecord, wanted: &[&str; N]) -> Result<[usize; N]> {
    let mut out = [0usize; N];
    for (slot, name) in out.iter_mut().zip(wanted) {
        *slot = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
    }
    Ok(out)
}

fn parse_field<T: FromStr>(value: &str, field: &str, row: usize) -> Result<T> {
    value.parse().map_err(|_| DatasetError::InvalidField {
        row,
        field: field.to_string(),
        value: value.to_string(),
    })
}

/// Which image the metric was computed on: the full-resolution picture or the
/// crop shown to observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Crop,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Crop => "crop",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "crop" => Ok(Variant::Crop),
            other => Err(format!("unknown variant `{other}` (expected full or crop)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "higher")]
    HigherIsBetter,
    #[serde(rename = "lower")]
    LowerIsBetter,
}

impl Polarity {
    /// Sign that turns a raw score into a predicted impairment: larger
    /// oriented values mean more visible distortion, like the JND scale.
    pub fn impairment_sign(self) -> f64 {
        match self {
            Polarity::HigherIsBetter => -1.0,
            Polarity::LowerIsBetter => 1.0,
        }
    }
}

/// Metric name → polarity, as read from the JSON polarity config.
pub type PolarityConfig = BTreeMap<String, Polarity>;

pub fn load_polarity_json(path: impl AsRef<Path>) -> Result<PolarityConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Polarities of the natively computed metrics and of the common external
/// ones, keyed by lowercase name. Explicit configs take precedence.
pub fn default_polarities() -> PolarityConfig {
    use Polarity::*;
    [
        ("psnr_y", HigherIsBetter),
        ("psnry", HigherIsBetter),
        ("psnr-hvs", HigherIsBetter),
        ("ssim", HigherIsBetter),
        ("ms_ssim", HigherIsBetter),
        ("ms-ssim", HigherIsBetter),
        ("iw-ssim", HigherIsBetter),
        ("fsim", HigherIsBetter),
        ("fsimc", HigherIsBetter),
        ("gmsd", LowerIsBetter),
        ("uqi", HigherIsBetter),
        ("nlpd", LowerIsBetter),
        ("vif", HigherIsBetter),
        ("haar_psi", HigherIsBetter),
        ("haar-psi", HigherIsBetter),
        ("vsi", HigherIsBetter),
        ("cvvdp", HigherIsBetter),
        ("flip", LowerIsBetter),
        ("ssimulacra1", LowerIsBetter),
        ("ssimulacra2", HigherIsBetter),
        ("hdr-vdp-2", HigherIsBetter),
        ("hdr-vdp-3", HigherIsBetter),
        ("butteraugli", LowerIsBetter),
        ("vmaf", HigherIsBetter),
        ("vmaf-neg", HigherIsBetter),
        ("topiq", HigherIsBetter),
        ("dists", LowerIsBetter),
        ("a-dists", LowerIsBetter),
        ("lpips", LowerIsBetter),
        ("pieapp", LowerIsBetter),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// PSNR-type metrics may carry `+inf` for identical images.
pub fn allows_infinite_sentinel(metric: &str) -> bool {
    metric.to_ascii_lowercase().contains("psnr")
}

/// Raw objective scores keyed by `(metric, variant, stimulus_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricScoreTable {
    entries: BTreeMap<(String, Variant, String), f64>,
    polarity: BTreeMap<String, Polarity>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub metric: String,
    pub variant: Variant,
    pub stimulus_id: String,
    pub score: f64,
}

impl MetricScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score(&self, metric: &str, variant: Variant, stimulus: &str) -> Option<f64> {
        // BTreeMap lookups need an owned key; scores tables are small enough.
        self.entries
            .get(&(metric.to_string(), variant, stimulus.to_string()))
            .copied()
    }

    pub fn polarity(&self, metric: &str) -> Option<Polarity> {
        self.polarity.get(metric).copied()
    }

    pub fn set_polarity(&mut self, metric: impl Into<String>, polarity: Polarity) {
        self.polarity.insert(metric.into(), polarity);
    }

    /// Distinct metric names, sorted.
    pub fn metrics(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.keys().map(|(m, _, _)| m).collect();
        set.into_iter().cloned().collect()
    }

    pub fn variants(&self, metric: &str) -> Vec<Variant> {
        let set: BTreeSet<Variant> = self
            .entries
            .keys()
            .filter(|(m, _, _)| m == metric)
            .map(|(_, v, _)| *v)
            .collect();
        set.into_iter().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = ScoreRow> + '_ {
        self.entries.iter().map(|((m, v, s), score)| ScoreRow {
            metric: m.clone(),
            variant: *v,
            stimulus_id: s.clone(),
            score: *score,
        })
    }

    /// Inserts one score. `row` is only used for error reporting.
    pub fn insert(&mut self, row: ScoreRow, line: usize) -> Result<()> {
        let ok = row.score.is_finite()
            || (row.score == f64::INFINITY && allows_infinite_sentinel(&row.metric));
        if !ok {
            return Err(DatasetError::NonFiniteScore {
                metric: row.metric,
                row: line,
            });
        }
        let key = (row.metric, row.variant, row.stimulus_id);
        if self.entries.contains_key(&key) {
            return Err(DatasetError::DuplicateScore {
                metric: key.0,
                variant: key.1,
                stimulus: key.2,
                row: line,
            });
        }
        self.entries.insert(key, row.score);
        Ok(())
    }

    /// Merges `other` into `self`; duplicate keys are an error.
    pub fn merge(&mut self, other: MetricScoreTable) -> Result<()> {
        for row in other.rows().collect::<Vec<_>>() {
            self.insert(row, 0)?;
        }
        for (m, p) in other.polarity {
            self.polarity.insert(m, p);
        }
        Ok(())
    }

    /// Attaches polarities, first from `config` then from the built-in
    /// defaults (case-insensitive). Fails on the first metric left undeclared.
    pub fn resolve_polarity(&mut self, config: &PolarityConfig) -> Result<()> {
        let defaults = default_polarities();
        let lowered: HashMap<String, Polarity> = config
            .iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), *v))
            .collect();
        for metric in self.metrics() {
            if self.polarity.contains_key(&metric) && !config.contains_key(&metric) {
                continue;
            }
            let key = metric.to_ascii_lowercase();
            let p = config
                .get(&metric)
                .or_else(|| lowered.get(&key))
                .or_else(|| defaults.get(&key))
                .copied()
                .ok_or_else(|| DatasetError::MissingPolarity(metric.clone()))?;
            self.polarity.insert(metric, p);
        }
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>, polarity: &PolarityConfig) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut table = Self::read_csv(file)?;
        table.resolve_polarity(polarity)?;
        Ok(table)
    }

    /// Reads score rows without resolving polarity.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        let cols = column_indices(&headers, &SCORES_HEADER)?;
        let mut table = Self::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let get = |k: usize| row.get(cols[k]).unwrap_or("");
            let variant = get(1).parse::<Variant>().map_err(|_| DatasetError::InvalidField {
                row: line,
                field: "variant".into(),
                value: get(1).to_string(),
            })?;
            let score: f64 = parse_field(get(3), "score", line)?;
            table.insert(
                ScoreRow {
                    metric: get(0).to_string(),
                    variant,
                    stimulus_id: get(2).to_string(),
                    score,
                },
                line,
            )?;
        }
        if table.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(SCORES_HEADER)?;
        for row in self.rows() {
            wtr.write_record([
                row.metric,
                row.variant.to_string(),
                row.stimulus_id,
                format_score(row.score),
            ])?;
        }
        wtr.flush().map_err(|source| DatasetError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Shortest round-tripping decimal, in exponent form for very small or very
/// large magnitudes; `inf` for the PSNR sentinel.
pub fn format_score(score: f64) -> String {
    format!("{score:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FidelityRange {
    All,
    /// High fidelity: `jnd_mean` in `[0, 1]`.
    HF,
    /// Medium fidelity: `jnd_mean > 1`.
    MF,
}

impl FidelityRange {
    pub const ALL_RANGES: [FidelityRange; 3] = [FidelityRange::All, FidelityRange::HF, FidelityRange::MF];

    /// The boundary value itself belongs to HF so that HF and MF partition
    /// the dataset.
    pub fn contains(self, jnd_mean: f64) -> bool {
        match self {
            FidelityRange::All => true,
            FidelityRange::HF => jnd_mean <= FIDELITY_BOUNDARY_JND,
            FidelityRange::MF => jnd_mean > FIDELITY_BOUNDARY_JND,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FidelityRange::All => "All",
            FidelityRange::HF => "HF",
            FidelityRange::MF => "MF",
        }
    }
}

impl fmt::Display for FidelityRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FidelityRange {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(FidelityRange::All),
            "hf" => Ok(FidelityRange::HF),
            "mf" => Ok(FidelityRange::MF),
            other => Err(format!("unknown fidelity range `{other}` (expected all, hf or mf)")),
        }
    }
}

/// Objective scores aligned with subjective means and deviations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedSeries {
    pub stimulus_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub jnd_mean: Vec<f64>,
    pub jnd_std: Vec<f64>,
}

impl PairedSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            stimulus_ids: Vec::with_capacity(n),
            scores: Vec::with_capacity(n),
            jnd_mean: Vec::with_capacity(n),
            jnd_std: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, id: &str, score: f64, mean: f64, std: f64) {
        self.stimulus_ids.push(id.to_string());
        self.scores.push(score);
        self.jnd_mean.push(mean);
        self.jnd_std.push(std);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn filter(&self, range: FidelityRange) -> PairedSeries {
        let mut out = PairedSeries::with_capacity(self.len());
        for i in 0..self.len() {
            if range.contains(self.jnd_mean[i]) {
                out.push(&self.stimulus_ids[i], self.scores[i], self.jnd_mean[i], self.jnd_std[i]);
            }
        }
        out
    }

    /// Indices of the entries falling in `range`.
    pub fn indices_in(&self, range: FidelityRange) -> Vec<usize> {
        (0..self.len()).filter(|&i| range.contains(self.jnd_mean[i])).collect()
    }
}
