//! With/without ablation: chronological split, model presets, RMSE/MAE and
//! the comparison report in text, CSV and JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data_ingest::{build_panel, load_macro_csv, load_price_csv_with, MacroKind, Panel, PriceField};
use crate::error::{Error, Result, StageContext};
use crate::feature_lab::{assemble, FeatureFrame, FeatureSpec, Variant};
use crate::gbm::{fit_gbm, predict_ensemble, BoostConfig};
use crate::synthetic::{generate, SyntheticSpec};
use crate::tree_model::{fit_tree, TreeParams};
use crate::ts_stats::{pacf_reports, rank_and_select, PacScore, PacfReport};

pub const LEAKAGE_NOTE: &str = "features for a row dated t use closes at least lag_days trading days \
before t and macro values published on or before t; lead interest-rate features (rate at t + k \
calendar days) are exempt by design as anticipated policy";

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub test_fraction: f64,
    /// First test date.
    pub boundary_date: NaiveDate,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// The latest ⌈fraction · distinct dates⌉ dates, across all tickers, form the test set.
pub fn time_split(frame: &FeatureFrame, test_fraction: f64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test_fraction {test_fraction} outside (0, 1)")));
    }
    let mut dates: Vec<NaiveDate> = frame.keys().iter().map(|k| k.date).collect();
    dates.sort_unstable();
    dates.dedup();
    if dates.len() < 2 {
        return Err(Error::invalid("time split needs at least two distinct dates"));
    }
    let n_test = ((test_fraction * dates.len() as f64 - 1e-9).ceil() as usize).clamp(1, dates.len() - 1);
    let boundary_date = dates[dates.len() - n_test];
    let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
        (0..frame.n_rows()).partition(|&i| frame.keys()[i].date >= boundary_date);
    Ok(SplitPlan {
        test_fraction,
        boundary_date,
        train_rows,
        test_rows,
    })
}

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::invalid("metrics need at least one value"));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let ss: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((ss / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let s: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(s / actual.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Lgbm,
    Xgb,
    Dtree,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Lgbm, Preset::Xgb, Preset::Dtree];

    pub fn key(self) -> &'static str {
        match self {
            Preset::Lgbm => "lgbm",
            Preset::Xgb => "xgb",
            Preset::Dtree => "dtree",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Preset::Lgbm => "Light GBM",
            Preset::Xgb => "XGB Regressor",
            Preset::Dtree => "Decision Tree",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| Error::invalid(format!("unknown preset `{s}` (expected lgbm, xgb or dtree)")))
    }
}

/// A preset resolved to concrete hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Boost(BoostConfig),
    Tree(TreeParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub prices: PathBuf,
    pub rates: PathBuf,
    pub cpi: PathBuf,
    pub unemp: PathBuf,
    pub adj_close: bool,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            prices: "prices.csv".into(),
            rates: "rates.csv".into(),
            cpi: "cpi.csv".into(),
            unemp: "unemp.csv".into(),
            adj_close: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: Option<DataPaths>,
    pub synthetic: bool,
    pub synthetic_spec: SyntheticSpec,
    pub start_year: i32,
    pub end_year: i32,
    pub features: FeatureSpec,
    pub test_fraction: f64,
    /// Explicit ticker list; bypasses PACF selection.
    pub tickers: Option<Vec<String>>,
    pub top_k: usize,
    pub max_lag: usize,
    pub pac_abs: bool,
    pub presets: Vec<Preset>,
    /// Per-preset hyperparameter overrides, merged field by field over the preset.
    pub overrides: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: None,
            synthetic: false,
            synthetic_spec: SyntheticSpec::default(),
            start_year: 2017,
            end_year: 2019,
            features: FeatureSpec::default(),
            test_fraction: 0.2,
            tickers: None,
            top_k: 10,
            max_lag: 59,
            pac_abs: false,
            presets: Preset::ALL.to_vec(),
            overrides: BTreeMap::new(),
            seed: 42,
        }
    }
}

fn merge(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.synthetic && self.data.is_none() {
            return Err(Error::Config("either `data` paths or `synthetic: true` is required".into()));
        }
        if self.start_year > self.end_year {
            return Err(Error::Config(format!(
                "start_year {} after end_year {}",
                self.start_year, self.end_year
            )));
        }
        if self.presets.is_empty() {
            return Err(Error::Config("no presets selected".into()));
        }
        for key in self.overrides.keys() {
            key.parse::<Preset>()
                .map_err(|_| Error::Config(format!("override for unknown preset `{key}`")))?;
        }
        if self.top_k == 0 || self.max_lag == 0 {
            return Err(Error::Config("top_k and max_lag must be at least 1".into()));
        }
        self.features.validate()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        Ok(Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }

    pub fn model_spec(&self, preset: Preset) -> Result<ModelSpec> {
        let patch = self.overrides.get(preset.key());
        let apply = |base: serde_json::Value| -> Result<serde_json::Value> {
            let mut v = base;
            if let Some(p) = patch {
                merge(&mut v, p);
            }
            Ok(v)
        };
        let bad = |e: serde_json::Error| Error::Config(format!("{preset} override: {e}"));
        Ok(match preset {
            Preset::Lgbm | Preset::Xgb => {
                let base = if preset == Preset::Lgbm {
                    BoostConfig::lgbm()
                } else {
                    BoostConfig::xgb()
                };
                let mut cfg: BoostConfig =
                    serde_json::from_value(apply(serde_json::to_value(base)?)?).map_err(bad)?;
                if patch.and_then(|p| p.get("seed")).is_none() {
                    cfg.seed = self.seed;
                }
                cfg.validate()?;
                ModelSpec::Boost(cfg)
            }
            Preset::Dtree => {
                let params: TreeParams =
                    serde_json::from_value(apply(serde_json::to_value(TreeParams::default())?)?)
                        .map_err(bad)?;
                params.validate()?;
                ModelSpec::Tree(params)
            }
        })
    }
}

/// Panel, ticker ranking and both feature frames for one configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub panel: Panel,
    pub reports: Vec<PacfReport>,
    pub tickers: Vec<String>,
    pub baseline: FeatureFrame,
    pub proposed: FeatureFrame,
}

pub fn load_panel(config: &ExperimentConfig) -> Result<Panel> {
    let years = config.start_year..=config.end_year;
    if config.synthetic {
        let data = generate(&config.synthetic_spec, config.seed)?;
        return build_panel(&data.prices, &data.rates, &data.cpi, &data.unemp, years);
    }
    let paths = config
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("data paths missing".into()))?;
    let field = if paths.adj_close {
        PriceField::AdjClose
    } else {
        PriceField::Close
    };
    let prices = load_price_csv_with(&paths.prices, field)?;
    let rates = load_macro_csv(&paths.rates, MacroKind::InterestRate)?;
    let cpi = load_macro_csv(&paths.cpi, MacroKind::Cpi)?;
    let unemp = load_macro_csv(&paths.unemp, MacroKind::Unemployment)?;
    build_panel(&prices, &rates, &cpi, &unemp, years)
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let panel = load_panel(config).stage("ingest")?;

    let series: BTreeMap<String, Vec<f64>> = panel
        .tickers()
        .iter()
        .map(|t| Ok((t.clone(), panel.closes(t)?)))
        .collect::<Result<_>>()?;
    let reports = pacf_reports(&series, config.max_lag).stage("ticker selection")?;
    let tickers = match &config.tickers {
        Some(list) => list.clone(),
        None => {
            let mode = if config.pac_abs {
                PacScore::Absolute
            } else {
                PacScore::Signed
            };
            let k = config.top_k.min(reports.len());
            rank_and_select(&reports, k, mode).stage("ticker selection")?
        }
    };
    let panel = panel.select_tickers(&tickers).stage("ticker selection")?;

    let (baseline, proposed) = rayon::join(
        || assemble(&panel, &config.features, Variant::Baseline),
        || assemble(&panel, &config.features, Variant::Proposed),
    );
    let baseline = baseline.stage("features")?;
    let proposed = proposed.stage("features")?;
    if baseline.keys() != proposed.keys() {
        return Err(Error::Stage {
            stage: "features",
            source: Box::new(Error::Validation("variant frames have different row keys".into())),
        });
    }
    Ok(Prepared {
        panel,
        reports,
        tickers,
        baseline,
        proposed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub model: Preset,
    pub variant: Variant,
    pub rmse: f64,
    pub mae: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportMetadata {
    pub config_digest: String,
    pub seed: u64,
    pub date_start: Option<NaiveDate>,
    pub date_end: Option<NaiveDate>,
    pub test_start: Option<NaiveDate>,
    pub tickers: Vec<String>,
    pub leakage_note: String,
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub entries: Vec<ReportEntry>,
    pub metadata: ReportMetadata,
}

impl ComparisonReport {
    /// Models in first-appearance order.
    pub fn models(&self) -> Vec<Preset> {
        let mut out: Vec<Preset> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.model) {
                out.push(e.model);
            }
        }
        out
    }

    pub fn entry(&self, model: Preset, variant: Variant) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .find(|e| e.model == model && e.variant == variant)
    }
}

fn fit_and_score(spec: &ModelSpec, frame: &FeatureFrame, plan: &SplitPlan) -> Result<(f64, f64)> {
    let train = frame.subset(&plan.train_rows);
    let test = frame.subset(&plan.test_rows);
    let pred = match spec {
        ModelSpec::Boost(cfg) => predict_ensemble(&fit_gbm(&train, cfg)?, &test)?,
        ModelSpec::Tree(params) => fit_tree(&train, params)?.predict_frame(&test)?,
    };
    Ok((rmse(test.target(), &pred)?, mae(test.target(), &pred)?))
}

pub fn run_ablation(config: &ExperimentConfig) -> Result<ComparisonReport> {
    let prepared = prepare(config)?;
    run_prepared(config, &prepared)
}

pub fn run_prepared(config: &ExperimentConfig, prepared: &Prepared) -> Result<ComparisonReport> {
    let plan = time_split(&prepared.baseline, config.test_fraction).stage("split")?;
    let specs: Vec<(Preset, ModelSpec)> = config
        .presets
        .iter()
        .map(|&p| Ok((p, config.model_spec(p)?)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(Preset, &ModelSpec, Variant)> = specs
        .iter()
        .flat_map(|(p, s)| [Variant::Baseline, Variant::Proposed].map(|v| (*p, s, v)))
        .collect();
    let scores: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|(_, spec, variant)| {
            let frame = match variant {
                Variant::Baseline => &prepared.baseline,
                Variant::Proposed => &prepared.proposed,
            };
            fit_and_score(spec, frame, &plan)
        })
        .collect::<Result<_>>()
        .stage("training")?;

    let entries = jobs
        .iter()
        .zip(scores)
        .map(|((model, _, variant), (rmse, mae))| ReportEntry {
            model: *model,
            variant: *variant,
            rmse,
            mae,
            n_test: plan.test_rows.len(),
        })
        .collect();
    let dates = prepared.baseline.keys().iter().map(|k| k.date);
    Ok(ComparisonReport {
        entries,
        metadata: ReportMetadata {
            config_digest: config.digest()?,
            seed: config.seed,
            date_start: dates.clone().min(),
            date_end: dates.max(),
            test_start: Some(plan.boundary_date),
            tickers: prepared.tickers.clone(),
            leakage_note: LEAKAGE_NOTE.into(),
            generated_at: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(format!("unknown format `{other}`"))),
        }
    }
}

const CSV_HEADER: [&str; 7] = [
    "model",
    "without_rmse",
    "without_mae",
    "without_n_test",
    "with_rmse",
    "with_mae",
    "with_n_test",
];

fn metric_pair(report: &ComparisonReport, model: Preset, variant: Variant) -> Result<&ReportEntry> {
    report.entry(model, variant).ok_or_else(|| {
        Error::invalid(format!("report lacks the {} row for {model}", variant.as_str()))
    })
}

fn render_text(report: &ComparisonReport) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16}{:^22}{:^22}\n",
        "", "Without proposed", "With proposed"
    ));
    out.push_str(&format!(
        "{:<16}{:>10}{:>10}  {:>10}{:>10}\n",
        "Model", "RMSE", "MAE", "RMSE", "MAE"
    ));
    for model in report.models() {
        let a = metric_pair(report, model, Variant::Baseline)?;
        let b = metric_pair(report, model, Variant::Proposed)?;
        out.push_str(&format!(
            "{:<16}{:>10.3}{:>10.3}  {:>10.3}{:>10.3}\n",
            model.display_name(),
            a.rmse,
            a.mae,
            b.rmse,
            b.mae
        ));
    }
    let m = &report.metadata;
    out.push_str(&format!("\nn_test: {}\n", report.entries.first().map_or(0, |e| e.n_test)));
    if !m.tickers.is_empty() {
        out.push_str(&format!("tickers: {}\n", m.tickers.join(" ")));
    }
    if let (Some(s), Some(e)) = (m.date_start, m.date_end) {
        out.push_str(&format!("dates: {s} to {e}"));
        if let Some(t) = m.test_start {
            out.push_str(&format!(" (test from {t})"));
        }
        out.push('\n');
    }
    out.push_str(&format!("seed: {}\nconfig: {}\n", m.seed, m.config_digest));
    if !m.leakage_note.is_empty() {
        out.push_str(&format!("note: {}\n", m.leakage_note));
    }
    if let Some(g) = &m.generated_at {
        out.push_str(&format!("generated: {g}\n"));
    }
    Ok(out)
}

fn render_csv(report: &ComparisonReport) -> Result<String> {
    let mut buf = Vec::new();
    // metadata rides along as comment lines so the table itself stays plain
    writeln!(buf, "# metadata {}", serde_json::to_string(&report.metadata)?)
        .map_err(|e| Error::io("<report>", e))?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(CSV_HEADER)?;
        for model in report.models() {
            let a = metric_pair(report, model, Variant::Baseline)?;
            let b = metric_pair(report, model, Variant::Proposed)?;
            w.write_record([
                model.key().to_string(),
                a.rmse.to_string(),
                a.mae.to_string(),
                a.n_test.to_string(),
                b.rmse.to_string(),
                b.mae.to_string(),
                b.n_test.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
    }
    String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
}

/// Render a report; writes to `path` when given.
pub fn emit_report(report: &ComparisonReport, format: ReportFormat, path: Option<&Path>) -> Result<String> {
    if report.entries.is_empty() {
        return Err(Error::invalid("report has no entries"));
    }
    let text = match format {
        ReportFormat::Text => render_text(report)?,
        ReportFormat::Csv => render_csv(report)?,
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
    };
    if let Some(p) = path {
        std::fs::write(p, &text).map_err(|e| Error::io(p, e))?;
    }
    Ok(text)
}

pub fn parse_report_json(text: &str) -> Result<ComparisonReport> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_report_csv(text: &str) -> Result<ComparisonReport> {
    let mut metadata = ReportMetadata::default();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(json) = line.strip_prefix("# metadata ") {
            metadata = serde_json::from_str(json)?;
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    if r.headers()?.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::invalid("unexpected report CSV header"));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::invalid(format!("bad number `{s}` in report CSV")))
    };
    let count = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::invalid(format!("bad count `{s}` in report CSV")))
    };
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let model: Preset = rec[0].parse()?;
        entries.push(ReportEntry {
            model,
            variant: Variant::Baseline,
            rmse: num(&rec[1])?,
            mae: num(&rec[2])?,
            n_test: count(&rec[3])?,
        });
        entries.push(ReportEntry {
            model,
            variant: Variant::Proposed,
            rmse: num(&rec[4])?,
            mae: num(&rec[5])?,
            n_test: count(&rec[6])?,
        });
    }
    Ok(ComparisonReport { entries, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_lab::RowKey;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame_on_dates(n_dates: usize, tickers: &[&str]) -> FeatureFrame {
        let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        let mut keys = Vec::new();
        for t in tickers {
            for i in 0..n_dates {
                keys.push(RowKey {
                    ticker: t.to_string(),
                    date: start + chrono::Duration::days(i as i64),
                });
            }
        }
        let n = keys.len();
        FeatureFrame::new(
            keys,
            (0..n).map(|i| i as f64).collect(),
            vec!["x".into()],
            (0..n).map(|i| (i % 7) as f64).collect(),
            Variant::Baseline,
        )
        .unwrap()
    }

    #[test]
    fn split_examples() {
        let f = frame_on_dates(10, &["A", "B"]);
        let p = time_split(&f, 0.2).unwrap();
        assert_eq!(p.test_rows.len(), 4);
        assert_eq!(p.boundary_date, NaiveDate::from_ymd_opt(2019, 1, 9).unwrap());
        let f4 = frame_on_dates(4, &["A"]);
        let p4 = time_split(&f4, 0.5).unwrap();
        assert_eq!(p4.test_rows, vec![2, 3]);
        let max_train = p.train_rows.iter().map(|&i| f.keys()[i].date).max().unwrap();
        let min_test = p.test_rows.iter().map(|&i| f.keys()[i].date).min().unwrap();
        assert!(max_train < min_test);
        assert_eq!(p.train_rows.len() + p.test_rows.len(), f.n_rows());
        assert!(time_split(&frame_on_dates(1, &["A"]), 0.5).is_err());
        assert!(time_split(&f, 1.0).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(mae(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn metrics_match_two_pass_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..1000).map(|_| rng.random_range(-5.0..5.0)).collect();
        let p: Vec<f64> = (0..1000).map(|_| rng.random_range(-5.0..5.0)).collect();
        let errs: Vec<f64> = a.iter().zip(&p).map(|(x, y)| x - y).collect();
        let mut sq = 0.0;
        for e in &errs {
            sq += e * e;
        }
        let reference = (sq / 1000.0).sqrt();
        assert!((rmse(&a, &p).unwrap() - reference).abs() < 1e-12);
        assert!(mae(&a, &p).unwrap() <= rmse(&a, &p).unwrap());
    }

    #[test]
    fn override_merging() {
        let mut cfg = ExperimentConfig {
            synthetic: true,
            ..ExperimentConfig::default()
        };
        cfg.overrides.insert("xgb".into(), serde_json::json!({"n_trees": 7, "max_depth": 3}));
        cfg.overrides.insert("dtree".into(), serde_json::json!({"min_samples_leaf": 5}));
        let ModelSpec::Boost(x) = cfg.model_spec(Preset::Xgb).unwrap() else { panic!() };
        assert_eq!((x.n_trees, x.max_depth, x.max_leaves), (7, Some(3), 64));
        let ModelSpec::Tree(t) = cfg.model_spec(Preset::Dtree).unwrap() else { panic!() };
        assert_eq!(t.min_samples_leaf, 5);
        cfg.overrides.insert("lgbm".into(), serde_json::json!({"n_bins": 1}));
        assert!(cfg.model_spec(Preset::Lgbm).is_err());
        cfg.overrides.insert("rf".into(), serde_json::json!({}));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn digest_tracks_config() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            seed: 43,
            ..ExperimentConfig::default()
        };
        assert_eq!(a.digest().unwrap().len(), 64);
        assert_eq!(a.digest().unwrap(), a.clone().digest().unwrap());
        assert_ne!(a.digest().unwrap(), b.digest().unwrap());
    }

    #[test]
    fn config_requires_a_source() {
        assert!(matches!(ExperimentConfig::default().validate(), Err(Error::Config(_))));
        let parsed: std::result::Result<ExperimentConfig, _> = serde_json::from_str(r#"{"bogus": 1}"#);
        assert!(parsed.is_err());
    }
}
