//! `evaluate`: per-pair score JSONs plus a summary CSV.
//!
//! Files are paired by id, the file stem with a role suffix (`_restored`,
//! `_clean`, `_underwater`, `_pred`, `_gt`) removed. Medium mode pairs
//! `<id>_T.exr` / `<id>_B.exr` maps instead.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    file_stem, list_files, prepare_output_dir, thread_pool, write_json, ExitStatus, Skipped, IMAGE_EXTENSIONS,
    SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::formation::MediumMaps;
use crate::imagecore::io::{read_exr_rgb, read_linear, write_atomic};
use crate::metrics::{evaluate_medium, full_reference, reference_free, LossWeights, ScoreReport, SsimConfig, UiqmWeights};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const REPORT_JSON: &str = "report.json";
pub const PER_IMAGE_DIR: &str = "per_image";

const ROLE_SUFFIXES: &[&str] = &["_restored", "_clean", "_underwater", "_pred", "_gt"];
const NON_IMAGE_SUFFIXES: &[&str] = &["_T", "_B", "_floored"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    FullReference,
    ReferenceFree,
    Medium,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::FullReference => "full-reference",
            EvalMode::ReferenceFree => "reference-free",
            EvalMode::Medium => "medium",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full-reference" => Ok(EvalMode::FullReference),
            "reference-free" => Ok(EvalMode::ReferenceFree),
            "medium" => Ok(EvalMode::Medium),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}; expected full-reference, reference-free or medium"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOptions {
    pub pred: PathBuf,
    /// Reference directory; unused in reference-free mode.
    pub gt: Option<PathBuf>,
    pub mode: EvalMode,
    pub output: PathBuf,
    pub strict: bool,
    pub linear_input: bool,
    pub workers: usize,
    pub force: bool,
    pub uiqm_weights: UiqmWeights,
}

impl EvaluateOptions {
    pub fn new(pred: impl Into<PathBuf>, gt: Option<PathBuf>, mode: EvalMode, output: impl Into<PathBuf>) -> Self {
        Self {
            pred: pred.into(),
            gt,
            mode,
            output: output.into(),
            strict: false,
            linear_input: false,
            workers: 0,
            force: false,
            uiqm_weights: UiqmWeights::default(),
        }
    }
}

/// One line of the summary CSV. Statistics cover finite values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub count: usize,
    pub n_infinite: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Population standard deviation.
    pub stddev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub schema_version: u32,
    pub id: String,
    pub mode: EvalMode,
    pub pred: Vec<String>,
    pub gt: Vec<String>,
    pub scores: ScoreReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub psnr_peak: f64,
    pub ssim: SsimConfig,
    pub ssim_channel: String,
    pub uiqm: UiqmWeights,
    pub uiqm_input: String,
    pub loss_weights: LossWeights,
    pub image_loss: String,
}

impl Conventions {
    fn new(uiqm: UiqmWeights) -> Self {
        Self {
            psnr_peak: 1.0,
            ssim: SsimConfig::default(),
            ssim_channel: "Rec.709 luminance of linear RGB, valid region".into(),
            uiqm,
            uiqm_input: "8-bit sRGB codes, 8x8 blocks".into(),
            loss_weights: LossWeights::default(),
            image_loss: "L1 + (1 - SSIM)".into(),
        }
    }

    fn comment_lines(&self, mode: EvalMode) -> String {
        let s = &self.ssim;
        let w = &self.loss_weights;
        format!(
            "# seasynth {} evaluate mode={mode}\n\
             # psnr: peak {} on linear RGB; identical pairs are +inf, counted in n_infinite and excluded from mean/median/stddev\n\
             # ssim: gaussian window {} sigma {} K1 {} K2 {} on {}\n\
             # uiqm: {} c1={} c2={} c3={}\n\
             # loss: {} with lambda_J={} lambda_T={} lambda_B={} lambda_L={}\n\
             # stddev: population\n",
            crate::VERSION,
            self.psnr_peak,
            s.window,
            s.sigma,
            s.k1,
            s.k2,
            self.ssim_channel,
            self.uiqm_input,
            self.uiqm.c1,
            self.uiqm.c2,
            self.uiqm.c3,
            self.image_loss,
            w.lambda_j,
            w.lambda_t,
            w.lambda_b,
            w.lambda_l,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub schema_version: u32,
    pub version: String,
    pub mode: EvalMode,
    pub conventions: Conventions,
    pub pairs: usize,
    /// Ids present on only one side, excluded from scoring.
    pub unmatched: Vec<String>,
    pub failures: Vec<Skipped>,
    pub summary: Vec<SummaryRow>,
    pub strict: bool,
}

impl EvaluationSummary {
    pub fn status(&self) -> ExitStatus {
        if self.strict && !self.unmatched.is_empty() {
            ExitStatus::HardError
        } else {
            ExitStatus::from_failures(self.unmatched.len() + self.failures.len())
        }
    }
}

fn image_key(path: &Path) -> Option<String> {
    let stem = file_stem(path);
    if NON_IMAGE_SUFFIXES.iter().any(|s| stem.ends_with(s)) {
        return None;
    }
    Some(
        ROLE_SUFFIXES
            .iter()
            .find_map(|s| stem.strip_suffix(s))
            .map(str::to_string)
            .unwrap_or(stem),
    )
}

fn is_exr(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("exr"))
}

/// Image files by id, preferring EXR when an id has several encodings.
fn collect_images(dir: &Path) -> Result<BTreeMap<String, Vec<PathBuf>>> {
    let mut out: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for path in list_files(dir, IMAGE_EXTENSIONS)? {
        let Some(key) = image_key(&path) else { continue };
        match out.get(&key) {
            Some(existing) if is_exr(&existing[0]) || !is_exr(&path) => {}
            _ => {
                out.insert(key, vec![path]);
            }
        }
    }
    Ok(out)
}

/// `<id>_T.exr` + `<id>_B.exr` pairs by id; ids with only one map are dropped.
fn collect_maps(dir: &Path) -> Result<BTreeMap<String, Vec<PathBuf>>> {
    let mut out = BTreeMap::new();
    for path in list_files(dir, &["exr"])? {
        let stem = file_stem(&path);
        if let Some(id) = stem.strip_suffix("_T") {
            let b = dir.join(format!("{id}_B.exr"));
            if b.is_file() {
                out.insert(id.to_string(), vec![path.clone(), b]);
            } else {
                log::warn!("{}: no matching backscatter map", path.display());
            }
        }
    }
    Ok(out)
}

fn score(mode: EvalMode, pred: &[PathBuf], gt: &[PathBuf], opts: &EvaluateOptions) -> Result<ScoreReport> {
    let load = |p: &Path| read_linear(p, opts.linear_input);
    match mode {
        EvalMode::FullReference => full_reference(&load(&pred[0])?, &load(&gt[0])?),
        EvalMode::ReferenceFree => Ok(reference_free(&load(&pred[0])?, &opts.uiqm_weights)),
        EvalMode::Medium => {
            let p = MediumMaps::new(read_exr_rgb(&pred[0])?, read_exr_rgb(&pred[1])?)?;
            let g = MediumMaps::new(read_exr_rgb(&gt[0])?, read_exr_rgb(&gt[1])?)?;
            Ok(evaluate_medium(&p, &g)?.into())
        }
    }
}

/// Count, infinities, and mean/median/population stddev of finite values.
pub fn summarize(name: &str, values: &[f64]) -> SummaryRow {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let n = finite.len();
    let (mean, median, stddev) = if n == 0 {
        (None, None, None)
    } else {
        let mean = finite.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            finite[n / 2]
        } else {
            (finite[n / 2 - 1] + finite[n / 2]) / 2.0
        };
        let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        (Some(mean), Some(median), Some(var.sqrt()))
    };
    SummaryRow {
        metric: name.to_string(),
        count: values.len(),
        n_infinite: values.iter().filter(|v| v.is_infinite()).count(),
        mean,
        median,
        stddev,
    }
}

fn summary_csv(rows: &[SummaryRow], header: &str) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(header.as_bytes().to_vec());
    w.write_record(["metric", "count", "n_infinite", "mean", "median", "stddev"])
        .map_err(|e| Error::Encode { what: "csv".into(), reason: e.to_string() })?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.metric.clone(),
            r.count.to_string(),
            r.n_infinite.to_string(),
            opt(r.mean),
            opt(r.median),
            opt(r.stddev),
        ])
        .map_err(|e| Error::Encode { what: "csv".into(), reason: e.to_string() })?;
    }
    w.into_inner()
        .map_err(|e| Error::Encode { what: "csv".into(), reason: e.to_string() })
}

fn strings(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

/// Scores every matched pair, writing `per_image/<id>.json`, `summary.csv`
/// and `report.json` under `opts.output`.
pub fn cmd_evaluate(opts: &EvaluateOptions) -> Result<EvaluationSummary> {
    let collect = |dir: &Path| match opts.mode {
        EvalMode::Medium => collect_maps(dir),
        _ => collect_images(dir),
    };
    let pred = collect(&opts.pred)?;
    let gt = match (opts.mode, &opts.gt) {
        (EvalMode::ReferenceFree, _) => BTreeMap::new(),
        (_, Some(dir)) => collect(dir)?,
        (mode, None) => return Err(Error::Config(format!("{mode} evaluation needs a reference directory"))),
    };

    let mut pairs: Vec<(String, Vec<PathBuf>, Vec<PathBuf>)> = Vec::new();
    let mut unmatched = Vec::new();
    for (id, p) in &pred {
        match (opts.mode, gt.get(id)) {
            (EvalMode::ReferenceFree, _) => pairs.push((id.clone(), p.clone(), Vec::new())),
            (_, Some(g)) => pairs.push((id.clone(), p.clone(), g.clone())),
            (_, None) => unmatched.push(format!("pred:{id}")),
        }
    }
    unmatched.extend(gt.keys().filter(|id| !pred.contains_key(*id)).map(|id| format!("gt:{id}")));
    for u in &unmatched {
        log::warn!("unmatched {u}");
    }

    prepare_output_dir(&opts.output, opts.force)?;
    let per_image = opts.output.join(PER_IMAGE_DIR);
    std::fs::create_dir_all(&per_image).map_err(|e| Error::io(&per_image, e))?;

    let scored: Vec<Result<PairReport>> = thread_pool(opts.workers)?.install(|| {
        pairs
            .par_iter()
            .map(|(id, p, g)| {
                let report = PairReport {
                    schema_version: SCHEMA_VERSION,
                    id: id.clone(),
                    mode: opts.mode,
                    pred: strings(p),
                    gt: strings(g),
                    scores: score(opts.mode, p, g, opts)?,
                };
                write_json(&per_image.join(format!("{id}.json")), &report)?;
                Ok(report)
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut by_metric: BTreeMap<&'static str, (usize, Vec<f64>)> = BTreeMap::new();
    let mut order = 0;
    for ((id, _, _), r) in pairs.iter().zip(scored) {
        match r {
            Ok(report) => {
                for (name, v) in report.scores.metrics() {
                    let slot = by_metric.entry(name).or_insert_with(|| {
                        order += 1;
                        (order, Vec::new())
                    });
                    slot.1.push(v);
                }
            }
            Err(e) => {
                log::error!("evaluate {id}: {e}");
                failures.push(Skipped {
                    path: id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    let mut metrics: Vec<(&str, (usize, Vec<f64>))> = by_metric.into_iter().collect();
    metrics.sort_by_key(|(_, (o, _))| *o);
    let summary: Vec<SummaryRow> = metrics.iter().map(|(n, (_, v))| summarize(n, v)).collect();

    let conventions = Conventions::new(opts.uiqm_weights);
    let csv = summary_csv(&summary, &conventions.comment_lines(opts.mode))?;
    write_atomic(&opts.output.join(SUMMARY_CSV), &csv)?;
    let result = EvaluationSummary {
        schema_version: SCHEMA_VERSION,
        version: crate::VERSION.to_string(),
        mode: opts.mode,
        conventions,
        pairs: pairs.len() - failures.len(),
        unmatched,
        failures,
        summary,
        strict: opts.strict,
    };
    write_json(&opts.output.join(REPORT_JSON), &result)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_strip_role_suffixes() {
        assert_eq!(image_key(Path::new("a/x_s00_restored.exr")).as_deref(), Some("x_s00"));
        assert_eq!(image_key(Path::new("x_s00_clean.png")).as_deref(), Some("x_s00"));
        assert_eq!(image_key(Path::new("plain.png")).as_deref(), Some("plain"));
        assert_eq!(image_key(Path::new("x_T.exr")), None);
    }

    #[test]
    fn summary_statistics() {
        let r = summarize("psnr", &[1.0, 2.0, 4.0, f64::INFINITY]);
        assert_eq!(r.count, 4);
        assert_eq!(r.n_infinite, 1);
        assert_eq!(r.mean, Some(7.0 / 3.0));
        assert_eq!(r.median, Some(2.0));
        let var: f64 = [1.0f64, 2.0, 4.0].iter().map(|v| (v - 7.0 / 3.0).powi(2)).sum::<f64>() / 3.0;
        assert_eq!(r.stddev, Some(var.sqrt()));
        let even = summarize("x", &[1.0, 3.0]);
        assert_eq!(even.median, Some(2.0));
        let none = summarize("psnr", &[f64::INFINITY]);
        assert_eq!((none.mean, none.median, none.stddev), (None, None, None));
    }

    #[test]
    fn csv_has_comments_then_fixed_columns() {
        let rows = vec![summarize("ssim", &[0.5, 1.0])];
        let text = String::from_utf8(summary_csv(&rows, "# note\n").unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# note");
        assert_eq!(lines[1], "metric,count,n_infinite,mean,median,stddev");
        assert_eq!(lines[2], "ssim,2,0,0.75,0.75,0.25");
    }

    #[test]
    fn modes_parse() {
        for m in [EvalMode::FullReference, EvalMode::ReferenceFree, EvalMode::Medium] {
            assert_eq!(m.to_string().parse::<EvalMode>().unwrap(), m);
        }
        assert!("fr".parse::<EvalMode>().is_err());
    }
}
