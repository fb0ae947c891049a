//! Subcommands of the `jndbench` binary.
//!
//! ```bash
//! jndbench metrics --images pairs.csv --out scores.csv
//! jndbench eval --dataset aic3.csv --scores scores.csv --scores external.csv --out report/
//! jndbench test --dataset aic3.csv --scores scores.csv --range all --out report/
//! jndbench synth --seed 7 --out synth/
//! ```

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jndbench_core::dataset::{FidelityRange, Variant};
use jndbench_core::stattests::{TestKind, WilcoxonConfig};
use jndbench_core::EvalError;
use jndbench_imgmetrics::ImageError;

pub use commands::{cmd_crop, cmd_eval, cmd_metrics, cmd_regress, cmd_synth, cmd_test};
pub use output::write_atomic;

#[derive(Parser, Debug)]
#[command(
    name = "jndbench",
    version,
    about = "Benchmark image quality metrics against JND-scaled subjective scores",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the native metrics for every pair in an image manifest.
    Metrics(MetricsArgs),
    /// Performance criteria per metric and fidelity range.
    Eval(EvalArgs),
    /// Pairwise significance matrices.
    Test(TestArgs),
    /// Cropped versus full-resolution scores of each metric.
    Crop(CropArgs),
    /// Kernel-regressed residual curves against the JND scale.
    Regress(RegressArgs),
    /// Generate a synthetic dataset with score tables.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    /// CSV with columns stimulus_id, ref_path, dist_path, variant.
    #[arg(long = "images", env = "JNDBENCH_IMAGES")]
    pub manifest: PathBuf,
    /// Base directory for relative image paths (default: the manifest's directory).
    #[arg(long, env = "JNDBENCH_IMAGE_ROOT")]
    pub image_root: Option<PathBuf>,
    /// Output metric-score CSV.
    #[arg(long, env = "JNDBENCH_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Subjective dataset CSV.
    #[arg(long, env = "JNDBENCH_DATASET")]
    pub dataset: PathBuf,
    /// Metric-score CSV. Repeat to merge several tables.
    #[arg(long = "scores", required = true, env = "JNDBENCH_SCORES", value_delimiter = ',')]
    pub scores: Vec<PathBuf>,
    /// JSON map metric -> "higher" | "lower", on top of the built-in table.
    #[arg(long, env = "JNDBENCH_POLARITY")]
    pub polarity: Option<PathBuf>,
    /// Restrict to these metrics (default: every metric in the tables).
    #[arg(long = "metric", value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Output directory.
    #[arg(long, env = "JNDBENCH_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct RangeArgs {
    /// Fidelity ranges to report.
    #[arg(long = "range", value_delimiter = ',', default_values = ["all", "hf", "mf"], env = "JNDBENCH_RANGE")]
    pub ranges: Vec<FidelityRange>,
}

impl RangeArgs {
    pub fn unique(&self) -> Vec<FidelityRange> {
        let mut out = Vec::new();
        for r in &self.ranges {
            if !out.contains(r) {
                out.push(*r);
            }
        }
        out
    }
}

#[derive(Args, Debug, Clone)]
pub struct TestConfigArgs {
    /// Significance level.
    #[arg(long, default_value_t = 0.05, env = "JNDBENCH_ALPHA")]
    pub alpha: f64,
    /// Compare the Wilcoxon p-value with |r| instead of alpha.
    #[arg(long, env = "JNDBENCH_PAPER_THRESHOLD")]
    pub paper_threshold: bool,
    /// Disable the continuity correction of the Wilcoxon statistic.
    #[arg(long)]
    pub no_continuity_correction: bool,
}

impl TestConfigArgs {
    pub fn config(&self) -> Result<WilcoxonConfig, CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(WilcoxonConfig {
            alpha: self.alpha,
            use_paper_threshold: self.paper_threshold,
            continuity_correction: !self.no_continuity_correction,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub ranges: RangeArgs,
    #[arg(long, default_value = "full", env = "JNDBENCH_VARIANT")]
    pub variant: Variant,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSelection {
    Mrr,
    Wilcoxon,
    Both,
}

impl TestSelection {
    pub fn kinds(self) -> Vec<TestKind> {
        match self {
            TestSelection::Mrr => vec![TestKind::Mrr],
            TestSelection::Wilcoxon => vec![TestKind::Wilcoxon],
            TestSelection::Both => vec![TestKind::Mrr, TestKind::Wilcoxon],
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub ranges: RangeArgs,
    #[command(flatten)]
    pub stats: TestConfigArgs,
    #[arg(long, default_value = "full", env = "JNDBENCH_VARIANT")]
    pub variant: Variant,
    #[arg(long = "test", value_enum, default_value_t = TestSelection::Both)]
    pub test: TestSelection,
}

#[derive(Args, Debug, Clone)]
pub struct CropArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub ranges: RangeArgs,
    #[command(flatten)]
    pub stats: TestConfigArgs,
}

#[derive(Args, Debug, Clone)]
pub struct RegressArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "full", env = "JNDBENCH_VARIANT")]
    pub variant: Variant,
    /// Number of evaluation points spanning the JND range.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// JSON generator config; unset fields take their defaults.
    #[arg(long, env = "JNDBENCH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, env = "JNDBENCH_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "JNDBENCH_OUT")]
    pub out: PathBuf,
}

/// One image pair that could not be scored.
#[derive(Debug)]
pub struct PairFailure {
    pub stimulus_id: String,
    pub variant: Variant,
    pub error: ImageError,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: EvalError,
    },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: EvalError,
    },
    #[error("{} of {total} image pairs failed", failures.len())]
    Pairs { failures: Vec<PairFailure>, total: usize },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl From<jndbench_core::dataset::DatasetError> for CliError {
    fn from(e: jndbench_core::dataset::DatasetError) -> Self {
        CliError::Eval(e.into())
    }
}

impl CliError {
    pub fn metric(metric: &str) -> impl Fn(EvalError) -> CliError + '_ {
        move |source| CliError::Context {
            context: format!("metric `{metric}`"),
            source,
        }
    }

    /// 2 for unreadable, malformed or missing input and for write failures,
    /// 1 for evaluation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Eval(e) | CliError::Context { source: e, .. } | CliError::InFile { source: e, .. } => {
                if e.is_input_error() {
                    2
                } else {
                    1
                }
            }
            CliError::Pairs { failures, .. } => {
                let input = failures.iter().any(|f| {
                    matches!(
                        f.error,
                        ImageError::Io { .. }
                            | ImageError::Decode { .. }
                            | ImageError::UnsupportedFormat(_)
                            | ImageError::AlphaChannel(_)
                    )
                });
                if input {
                    2
                } else {
                    1
                }
            }
            CliError::Manifest { .. } | CliError::Read { .. } | CliError::Write { .. } | CliError::Usage(_) => 2,
        }
    }

    /// Multi-line description for stderr, listing every failed pair.
    pub fn describe(&self) -> String {
        let mut out = format!("error: {self}");
        match self {
            CliError::Pairs { failures, .. } => {
                for f in failures {
                    out.push_str(&format!("\n  {} ({}): {}", f.stimulus_id, f.variant, f.error));
                }
            }
            _ => {
                let mut src = std::error::Error::source(self);
                while let Some(e) = src {
                    // Transparent wrappers repeat their inner message.
                    let msg = e.to_string();
                    if !out.ends_with(&msg) {
                        out.push_str(&format!("\n  caused by: {msg}"));
                    }
                    src = e.source();
                }
            }
        }
        out
    }
}

/// Runs one subcommand and returns the summary printed on stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Test(a) => cmd_test(&a),
        Command::Crop(a) => cmd_crop(&a),
        Command::Regress(a) => cmd_regress(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}
