use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use jndbench_core::criteria::{CriteriaOptions, CriteriaReport, PreparedMetric, SaStCurve};
use jndbench_core::dataset::{
    format_score, load_polarity_json, FidelityRange, MetricScoreTable, PolarityConfig, ScoreRow, SubjectiveDataset,
    Variant,
};
use jndbench_core::kernelreg::{default_candidates, fit_curve, linear_trend, uniform_grid, DEFAULT_CANDIDATES};
use jndbench_core::stattests::{compare_variants, significance_matrix, SignificanceMatrix, VariantComparison, WilcoxonConfig};
use jndbench_core::synth::{gen_dataset, SynthConfig};
use jndbench_core::transform::{transform_record, TransformRecord};
use jndbench_core::EvalError;
use jndbench_imgmetrics::compute_all;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{csv_text, file_stem, Outputs};
use crate::{CliError, CropArgs, EvalArgs, InputArgs, MetricsArgs, PairFailure, RegressArgs, SynthArgs, TestArgs};

fn in_file(path: &Path) -> impl Fn(EvalError) -> CliError + '_ {
    move |source| CliError::InFile {
        path: path.display().to_string(),
        source,
    }
}

fn f(v: f64) -> String {
    format_score(v)
}

fn load_inputs(args: &InputArgs) -> Result<(SubjectiveDataset, MetricScoreTable), CliError> {
    let ds = SubjectiveDataset::load_csv(&args.dataset)
        .map_err(|e| in_file(&args.dataset)(e.into()))?;
    let config = match &args.polarity {
        Some(p) => load_polarity_json(p).map_err(|e| in_file(p)(e.into()))?,
        None => PolarityConfig::new(),
    };
    let mut table = MetricScoreTable::new();
    for path in &args.scores {
        let file = File::open(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let part = MetricScoreTable::read_csv(file).map_err(|e| in_file(path)(e.into()))?;
        table.merge(part).map_err(|e| in_file(path)(e.into()))?;
    }
    table.resolve_polarity(&config)?;
    Ok((ds, table))
}

/// Requested metrics, or every metric with scores for all of `variants`.
fn select_metrics(table: &MetricScoreTable, requested: &[String], variants: &[Variant]) -> Result<Vec<String>, CliError> {
    let has_all = |m: &str| {
        let have = table.variants(m);
        variants.iter().all(|v| have.contains(v))
    };
    let wanted = variants.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(" and ");
    if requested.is_empty() {
        let names: Vec<String> = table.metrics().into_iter().filter(|m| has_all(m)).collect();
        if names.is_empty() {
            return Err(CliError::Usage(format!("no metric has {wanted} scores")));
        }
        return Ok(names);
    }
    let mut out = Vec::new();
    for m in requested {
        if !has_all(m) {
            return Err(CliError::Usage(format!("metric `{m}` has no {wanted} scores")));
        }
        if !out.contains(m) {
            out.push(m.clone());
        }
    }
    Ok(out)
}

fn prepare_all(
    ds: &SubjectiveDataset,
    table: &MetricScoreTable,
    names: &[String],
    variant: Variant,
) -> Result<Vec<PreparedMetric>, CliError> {
    names
        .par_iter()
        .map(|m| PreparedMetric::prepare(ds, table, m, variant).map_err(CliError::metric(m)))
        .collect()
}

fn written_summary(head: String, paths: &[PathBuf]) -> String {
    let mut out = head;
    for p in paths {
        out.push_str(&format!("\nwrote {}", p.display()));
    }
    out
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    stimulus_id: String,
    ref_path: PathBuf,
    dist_path: PathBuf,
    variant: Variant,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, CliError> {
    let bad = |message: String| CliError::Manifest {
        path: path.display().to_string(),
        message,
    };
    let file = File::open(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<ManifestRow>().enumerate() {
        rows.push(rec.map_err(|e| bad(format!("row {}: {e}", i + 2)))?);
    }
    if rows.is_empty() {
        return Err(bad("no image pairs".into()));
    }
    Ok(rows)
}

/// Scores every manifest pair in parallel. Nothing is written unless every
/// pair succeeds.
pub fn cmd_metrics(args: &MetricsArgs) -> Result<String, CliError> {
    let pairs = read_manifest(&args.manifest)?;
    let root = match &args.image_root {
        Some(r) => r.clone(),
        None => args.manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let results: Vec<_> = pairs
        .par_iter()
        .map(|p| compute_all(root.join(&p.ref_path), root.join(&p.dist_path)))
        .collect();

    let mut table = MetricScoreTable::new();
    let mut failures = Vec::new();
    for (line, (pair, res)) in pairs.iter().zip(results).enumerate() {
        match res {
            Ok(scores) => {
                for (metric, score) in scores {
                    let row = ScoreRow {
                        metric: metric.to_string(),
                        variant: pair.variant,
                        stimulus_id: pair.stimulus_id.clone(),
                        score,
                    };
                    table.insert(row, line + 2).map_err(|e| in_file(&args.manifest)(e.into()))?;
                }
            }
            Err(error) => failures.push(PairFailure {
                stimulus_id: pair.stimulus_id.clone(),
                variant: pair.variant,
                error,
            }),
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Pairs {
            failures,
            total: pairs.len(),
        });
    }
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let mut out = Outputs::default();
    out.add(args.out.clone(), buf);
    let written = out.commit()?;
    Ok(written_summary(
        format!("scored {} pairs, {} rows", pairs.len(), table.len()),
        &written,
    ))
}

const CRITERIA_HEADER: [&str; 12] = [
    "metric",
    "variant",
    "range",
    "n",
    "plcc",
    "srocc",
    "kt",
    "rmse",
    "z_rmse",
    "llr",
    "outlier_ratio",
    "pwrc_auc",
];

fn criteria_row(r: &CriteriaReport) -> Vec<String> {
    vec![
        r.metric.clone(),
        r.variant.to_string(),
        r.range.to_string(),
        r.n.to_string(),
        f(r.plcc),
        f(r.srocc),
        f(r.kt),
        f(r.rmse),
        f(r.z_rmse),
        f(r.llr),
        f(r.outlier_ratio),
        f(r.pwrc_auc),
    ]
}

struct MetricEval {
    all_srocc: f64,
    reports: Vec<CriteriaReport>,
    curves: Vec<(FidelityRange, SaStCurve)>,
    transform: TransformRecord,
}

/// Criteria for every (metric, range), ordered by ascending All-range
/// SROCC, plus the fitted transforms and the SA-ST curves.
pub fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let (ds, table) = load_inputs(&args.input)?;
    let ranges = args.ranges.unique();
    let names = select_metrics(&table, &args.input.metrics, &[args.variant])?;
    let prepared = prepare_all(&ds, &table, &names, args.variant)?;
    let opts = CriteriaOptions::default();

    let mut evals: Vec<MetricEval> = prepared
        .par_iter()
        .map(|m| {
            let inner = || -> Result<MetricEval, EvalError> {
                let all = m.report(FidelityRange::All, &opts)?;
                let mut reports = Vec::with_capacity(ranges.len());
                let mut curves = Vec::with_capacity(ranges.len());
                for &r in &ranges {
                    reports.push(if r == FidelityRange::All { all.clone() } else { m.report(r, &opts)? });
                    curves.push((r, m.sa_st_curve(r, opts.weighting)?));
                }
                Ok(MetricEval {
                    all_srocc: all.srocc,
                    reports,
                    curves,
                    transform: transform_record(&m.metric, m.variant, m.params),
                })
            };
            inner().map_err(CliError::metric(&m.metric))
        })
        .collect::<Result<_, _>>()?;
    evals.sort_by(|a, b| {
        a.all_srocc
            .total_cmp(&b.all_srocc)
            .then_with(|| a.transform.metric.cmp(&b.transform.metric))
    });

    let rows: Vec<Vec<String>> = evals.iter().flat_map(|e| e.reports.iter().map(criteria_row)).collect();
    let mut curve_rows = Vec::new();
    for e in &evals {
        for (r, c) in &e.curves {
            for (t, sa) in c.thresholds.iter().zip(&c.sa) {
                curve_rows.push(vec![
                    e.transform.metric.clone(),
                    args.variant.to_string(),
                    r.to_string(),
                    f(*t),
                    f(*sa),
                ]);
            }
        }
    }
    let transforms: Vec<&TransformRecord> = evals.iter().map(|e| &e.transform).collect();

    let dir = &args.input.out;
    let mut out = Outputs::default();
    out.add(dir.join("criteria.csv"), csv_text(&CRITERIA_HEADER, &rows));
    out.add_json(dir.join("transforms.json"), &transforms);
    out.add(
        dir.join("sa_st.csv"),
        csv_text(&["metric", "variant", "range", "st", "sa"], &curve_rows),
    );
    let written = out.commit()?;
    Ok(written_summary(
        format!("evaluated {} metrics on {} range(s)", evals.len(), ranges.len()),
        &written,
    ))
}

#[derive(Serialize)]
struct SignificanceFile<'a> {
    variant: Variant,
    config: WilcoxonConfig,
    matrices: &'a [SignificanceMatrix],
}

fn matrix_text(m: &SignificanceMatrix, cfg: &WilcoxonConfig) -> String {
    let rule = match m.test {
        jndbench_core::stattests::TestKind::Wilcoxon if cfg.use_paper_threshold => "p < |r|".to_string(),
        _ => format!("p < {}", cfg.alpha),
    };
    let mut out = format!(
        "{} significance, range {}, {}\nrow k, column j: + metric j significantly better than metric k, - worse, . no difference\n",
        m.test.as_str(),
        m.range,
        rule
    );
    out.push_str(&m.render_text());
    out
}

/// Significance matrices for every selected test and range.
pub fn cmd_test(args: &TestArgs) -> Result<String, CliError> {
    let cfg = args.stats.config()?;
    let (ds, table) = load_inputs(&args.input)?;
    let names = select_metrics(&table, &args.input.metrics, &[args.variant])?;
    if names.len() < 2 {
        return Err(CliError::Usage("significance tests need at least two metrics".into()));
    }
    let prepared = prepare_all(&ds, &table, &names, args.variant)?;
    let mut matrices = Vec::new();
    for kind in args.test.kinds() {
        for range in args.ranges.unique() {
            let m = significance_matrix(&prepared, range, kind, &cfg).map_err(|source| CliError::Context {
                context: format!("{} matrix on range {range}", kind.as_str()),
                source,
            })?;
            matrices.push(m);
        }
    }

    let dir = &args.input.out;
    let mut out = Outputs::default();
    for m in &matrices {
        let stem = format!("{}_{}", m.test.as_str(), m.range.as_str().to_ascii_lowercase());
        out.add(dir.join(format!("{stem}.csv")), m.to_csv());
        out.add(dir.join(format!("{stem}.txt")), matrix_text(m, &cfg));
    }
    out.add_json(
        dir.join("significance.json"),
        &SignificanceFile {
            variant: args.variant,
            config: cfg,
            matrices: &matrices,
        },
    );
    let written = out.commit()?;
    Ok(written_summary(
        format!("{} matrices over {} metrics", matrices.len(), names.len()),
        &written,
    ))
}

#[derive(Serialize)]
struct CropFile<'a> {
    config: WilcoxonConfig,
    comparisons: &'a [VariantComparison],
}

const CROP_HEADER: [&str; 20] = [
    "metric",
    "range",
    "b1",
    "b2",
    "b3",
    "b4",
    "mrr_z",
    "mrr_p",
    "mrr_decision",
    "wilcoxon_z",
    "wilcoxon_p",
    "wilcoxon_decision",
    "significant",
    "crop_plcc",
    "crop_srocc",
    "crop_rmse",
    "full_plcc",
    "full_srocc",
    "full_rmse",
    "abs_srocc_gap",
];

fn crop_row(c: &VariantComparison) -> Vec<String> {
    let p = c.params.to_array();
    vec![
        c.metric.clone(),
        c.range.to_string(),
        f(p[0]),
        f(p[1]),
        f(p[2]),
        f(p[3]),
        f(c.mrr.z_stat),
        f(c.mrr.p_value),
        c.mrr.decision.to_string(),
        f(c.wilcoxon.z_stat),
        f(c.wilcoxon.p_value),
        c.wilcoxon.decision.to_string(),
        u8::from(c.significant()).to_string(),
        f(c.crop.plcc),
        f(c.crop.srocc),
        f(c.crop.rmse),
        f(c.full.plcc),
        f(c.full.srocc),
        f(c.full.rmse),
        f((c.crop.srocc - c.full.srocc).abs()),
    ]
}

/// Crop against full-resolution scores of every metric that has both.
pub fn cmd_crop(args: &CropArgs) -> Result<String, CliError> {
    let cfg = args.stats.config()?;
    let (ds, table) = load_inputs(&args.input)?;
    let names = select_metrics(&table, &args.input.metrics, &[Variant::Crop, Variant::Full])?;
    let ranges = args.ranges.unique();
    let per_metric: Vec<Vec<VariantComparison>> = names
        .par_iter()
        .map(|m| {
            ranges
                .iter()
                .map(|&r| compare_variants(&ds, &table, m, r, &cfg).map_err(CliError::metric(m)))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let comparisons: Vec<VariantComparison> = per_metric.into_iter().flatten().collect();

    let mut head = format!("compared crop and full scores of {} metrics", names.len());
    for &r in &ranges {
        let in_range: Vec<&VariantComparison> = comparisons.iter().filter(|c| c.range == r).collect();
        let quiet = in_range.iter().filter(|c| !c.significant()).count();
        head.push_str(&format!(
            "\n{r}: {quiet} of {} without significant difference",
            in_range.len()
        ));
    }

    let dir = &args.input.out;
    let mut out = Outputs::default();
    let rows: Vec<Vec<String>> = comparisons.iter().map(crop_row).collect();
    out.add(dir.join("crop_summary.csv"), csv_text(&CROP_HEADER, &rows));
    out.add_json(
        dir.join("crop_report.json"),
        &CropFile {
            config: cfg,
            comparisons: &comparisons,
        },
    );
    let written = out.commit()?;
    Ok(written_summary(head, &written))
}

const PER_SAMPLE_NOTE: &str = "each stimulus contributes |S_trans - S_subj| (rmse) or |S_trans - S_subj| / sigma (zrmse); \
the curve is the Nadaraya-Watson estimate of that quantity against jnd_mean";

#[derive(Serialize)]
struct CurveSidecar<'a> {
    metric: &'a str,
    variant: Variant,
    quantity: &'a str,
    per_sample: &'a str,
    bandwidth: f64,
    candidates: usize,
    linear_trend: Option<f64>,
}

/// Residual curves against the JND scale, one per metric and quantity.
pub fn cmd_regress(args: &RegressArgs) -> Result<String, CliError> {
    if args.grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    let (ds, table) = load_inputs(&args.input)?;
    let names = select_metrics(&table, &args.input.metrics, &[args.variant])?;
    let prepared = prepare_all(&ds, &table, &names, args.variant)?;

    type Curves = Vec<(&'static str, jndbench_core::kernelreg::RegressionCurve)>;
    let curves: Vec<Curves> = prepared
        .par_iter()
        .map(|m| {
            let x = &m.series.jnd_mean;
            let abs = m.abs_residuals();
            let z: Vec<f64> = abs.iter().zip(&m.series.jnd_std).map(|(r, s)| r / s).collect();
            let grid = uniform_grid(x, args.grid);
            let fit = |y: &[f64]| fit_curve(x, y, &grid).map_err(|e| CliError::metric(&m.metric)(e.into()));
            Ok(vec![("rmse", fit(&abs)?), ("zrmse", fit(&z)?)])
        })
        .collect::<Result<_, CliError>>()?;

    let dir = &args.input.out;
    let mut out = Outputs::default();
    let mut summary = Vec::new();
    let mut stems = BTreeMap::new();
    for (m, cs) in prepared.iter().zip(&curves) {
        let base = format!("{}_{}", file_stem(&m.metric), m.variant);
        if let Some(other) = stems.insert(base.clone(), m.metric.clone()) {
            return Err(CliError::Usage(format!(
                "metrics `{other}` and `{}` map to the same file name",
                m.metric
            )));
        }
        let candidates = default_candidates(&m.series.jnd_mean, DEFAULT_CANDIDATES)
            .map(|c| c.len())
            .unwrap_or(0);
        for (quantity, curve) in cs {
            let trend = linear_trend(curve);
            out.add(dir.join(format!("{base}_{quantity}.csv")), curve.to_csv());
            out.add_json(
                dir.join(format!("{base}_{quantity}.json")),
                &CurveSidecar {
                    metric: &m.metric,
                    variant: m.variant,
                    quantity,
                    per_sample: PER_SAMPLE_NOTE,
                    bandwidth: curve.bandwidth,
                    candidates,
                    linear_trend: trend,
                },
            );
            summary.push(vec![
                m.metric.clone(),
                m.variant.to_string(),
                quantity.to_string(),
                f(curve.bandwidth),
                trend.map(f).unwrap_or_default(),
            ]);
        }
    }
    out.add(
        dir.join("regress_summary.csv"),
        csv_text(&["metric", "variant", "quantity", "bandwidth", "linear_trend"], &summary),
    );
    let written = out.commit()?;
    Ok(written_summary(
        format!("{} curves for {} metrics ({PER_SAMPLE_NOTE})", summary.len(), names.len()),
        &written,
    ))
}

#[derive(Serialize)]
struct SynthMeta<'a> {
    seed: u64,
    stimuli: usize,
    config: &'a SynthConfig,
}

/// Synthetic dataset, scores, polarities and generator metadata.
pub fn cmd_synth(args: &SynthArgs) -> Result<String, CliError> {
    let mut config = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Read {
                path: p.display().to_string(),
                source,
            })?;
            SynthConfig::from_json(&text).map_err(|e| in_file(p)(e.into()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let synth = gen_dataset(&config).map_err(EvalError::from)?;
    let mut ds_buf = Vec::new();
    synth.dataset.write_csv(&mut ds_buf)?;
    let mut sc_buf = Vec::new();
    synth.scores.write_csv(&mut sc_buf)?;
    let polarity: PolarityConfig = config.predictors.iter().map(|p| (p.name.clone(), p.polarity)).collect();

    let mut out = Outputs::default();
    out.add(args.out.join("dataset.csv"), ds_buf);
    out.add(args.out.join("scores.csv"), sc_buf);
    out.add_json(args.out.join("polarity.json"), &polarity);
    out.add_json(
        args.out.join("meta.json"),
        &SynthMeta {
            seed: config.seed,
            stimuli: synth.dataset.len(),
            config: &config,
        },
    );
    let written = out.commit()?;
    Ok(written_summary(
        format!("{} stimuli, seed {}", synth.dataset.len(), config.seed),
        &written,
    ))
}
