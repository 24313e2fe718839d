//! Run configuration, CSV ingestion, slicing and per-slice orchestration.
//!
//! A slice walks diagnose, preprocess, profile, select, backtest, rank and
//! ensemble on its input window; only then is the test window read, once,
//! to score the forecast. Every step is logged so the slice can be replayed
//! from its log alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::advisor::{self, AdvisorBackend, AdvisorDecision};
use crate::ensemble::{self, DecisionEvidence, EnsembleConfig, EnsembleDecision};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use crate::planner::{self, RankedModels};
use crate::preprocess::{self, DetectionPolicy, QualityDiagnostics, RepairPolicy};
use crate::profile::{build_profile, TemporalProfile};
use crate::reporter::{self, IntervalForecast, Score, SliceArtifacts, TestOutcome, WorkflowLog};
use crate::series::{Series, SplitSpec, ZScaler};

pub const MIN_INPUT_LENGTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub column: String,
    pub slices: usize,
    pub input_length: usize,
    pub horizons: Vec<usize>,
    pub seed: u64,
    pub pool_size: usize,
    pub configs_per_model: usize,
    pub top_k: usize,
    pub interval_level: f64,
    /// 0 uses every core, 1 runs sequentially.
    pub threads: usize,
    pub out: PathBuf,
    pub advisor: AdvisorBackend,
    pub ensemble: EnsembleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("data/synthetic.csv"),
            column: "value".into(),
            slices: 25,
            input_length: 512,
            horizons: vec![96, 192, 336, 720],
            seed: 42,
            pool_size: planner::DEFAULT_POOL_SIZE,
            configs_per_model: planner::DEFAULT_CONFIGS_PER_MODEL,
            top_k: planner::DEFAULT_TOP_K,
            interval_level: 95.0,
            threads: 0,
            out: PathBuf::from("out"),
            advisor: AdvisorBackend::default(),
            ensemble: EnsembleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn parallelism(&self) -> Parallelism {
        match self.threads {
            0 => Parallelism::Auto,
            n => Parallelism::from_threads(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.input_length < MIN_INPUT_LENGTH {
            return fail(format!("input_length must be >= {MIN_INPUT_LENGTH}, got {}", self.input_length));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return fail("horizons must be a non-empty list of positive counts".into());
        }
        if self.slices == 0 {
            return fail("slices must be >= 1".into());
        }
        if self.pool_size == 0 || self.pool_size > crate::models::ModelId::ALL.len() {
            return fail(format!("pool_size must be in 1..=10, got {}", self.pool_size));
        }
        if self.configs_per_model == 0 || self.top_k == 0 {
            return fail("configs_per_model and top_k must be >= 1".into());
        }
        if !(self.interval_level > 0.0 && self.interval_level < 100.0) {
            return fail(format!("interval_level must be in (0, 100), got {}", self.interval_level));
        }
        self.ensemble.validate()?;
        self.advisor.validate()
    }
}

/// Read one column; empty cells become missing values. Row numbers in
/// errors are file line numbers (the header is line 1).
pub fn ingest_csv(path: &Path, column: &str) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv { row: 0, message: e.to_string() })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { row: 1, message: e.to_string() })?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Csv { row, message: e.to_string() })?;
        let cell = record.get(col).unwrap_or("");
        if cell.is_empty() {
            values.push(None);
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(Some(v)),
            _ => {
                return Err(Error::Csv {
                    row,
                    message: format!("`{cell}` in column `{column}` is not a number"),
                })
            }
        }
    }
    Series::from_options(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceWindow {
    pub index: usize,
    pub start: usize,
    pub input: Series,
    pub test: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slicing {
    pub windows: Vec<SliceWindow>,
    pub warning: Option<String>,
}

/// Evenly spaced (possibly overlapping) windows of length T + H:
/// `start_i = round(i (n - (T+H)) / (count - 1))`.
pub fn make_slices(series: &Series, input_length: usize, horizon: usize, slice_count: usize) -> Result<Slicing> {
    let n = series.len();
    let span = input_length + horizon;
    if n < span {
        return Err(Error::InsufficientLength { needed: span, got: n });
    }
    if slice_count == 0 {
        return Err(Error::Config("slice count must be >= 1".into()));
    }
    let feasible = n - span + 1;
    let (count, warning) = if slice_count > feasible {
        (
            feasible,
            Some(format!(
                "series of length {n} fits only {feasible} distinct windows of {span}; using {feasible} instead of {slice_count}"
            )),
        )
    } else {
        (slice_count, None)
    };
    let free = (n - span) as f64;
    let windows = (0..count)
        .map(|i| {
            let start = if count == 1 { 0 } else { (i as f64 * free / (count - 1) as f64).round() as usize };
            Ok(SliceWindow {
                index: i,
                start,
                input: series.slice(start, start + input_length)?,
                test: series.values()[start + input_length..start + span].to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Slicing { windows, warning })
}

/// Settings shared by every slice of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSettings {
    pub horizon: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub configs_per_model: usize,
    pub top_k: usize,
    pub interval_level: f64,
    pub ensemble: EnsembleConfig,
    pub advisor: AdvisorBackend,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl SliceSettings {
    pub fn from_config(cfg: &RunConfig, horizon: usize) -> Self {
        Self {
            horizon,
            seed: cfg.seed,
            pool_size: cfg.pool_size,
            configs_per_model: cfg.configs_per_model,
            top_k: cfg.top_k,
            interval_level: cfg.interval_level,
            ensemble: cfg.ensemble,
            advisor: cfg.advisor.clone(),
            parallelism: cfg.parallelism(),
        }
    }
}

fn provenance(d: &AdvisorDecision) -> String {
    d.source.to_string()
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn observed_pairs(actual: &[Option<f64>], predicted: &[f64]) -> (Vec<f64>, Vec<f64>) {
    actual
        .iter()
        .zip(predicted)
        .filter_map(|(a, p)| a.map(|a| (a, *p)))
        .unzip()
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Stages after the advisor decisions: final fits on the whole input
/// window, combination and intervals. Shared by the run and the replay.
struct Forecasting {
    members: Vec<(String, Vec<f64>)>,
    intervals: IntervalForecast,
    val_ensemble: Score,
}

fn forecast_stage(
    cleaned: &Series,
    split: SplitSpec,
    ranked: &RankedModels,
    decision: &EnsembleDecision,
    settings: &SliceSettings,
) -> Result<Forecasting> {
    let train = cleaned.slice(0, split.train_len)?;
    let val = cleaned.slice(split.train_len, split.input_len())?.dense()?;
    let scaler = ZScaler::fit(&train.dense()?)?;
    let names: Vec<String> = ranked.ids().iter().map(|m| m.to_string()).collect();
    let finals: Vec<Result<Vec<f64>>> = par::map(settings.parallelism, &ranked.top_k, |r| {
        planner::forecast_scaled(&r.spec, cleaned, &scaler, settings.horizon)
    });
    let finals = finals.into_iter().collect::<Result<Vec<_>>>()?;
    let rho = settings.ensemble.rho;
    let point = ensemble::combine(decision, &names, &finals, Some(&scaler), rho)?;
    let val_forecasts: Vec<Vec<f64>> = ranked.top_k.iter().map(|r| r.val_forecast.clone()).collect();
    let val_point = ensemble::combine(decision, &names, &val_forecasts, Some(&scaler), rho)?;
    let residuals: Vec<f64> = val.iter().zip(&val_point).map(|(y, p)| y - p).collect();
    let intervals = reporter::build_intervals(&point, &finals, rms(&residuals), settings.interval_level)?;
    Ok(Forecasting {
        members: names.into_iter().zip(finals).collect(),
        intervals,
        val_ensemble: Score::compute(&val, &val_point)?,
    })
}

fn evaluate(actual: &[Option<f64>], f: &Forecasting) -> Result<Option<TestOutcome>> {
    let (y, _) = observed_pairs(actual, &f.intervals.point);
    if y.is_empty() {
        return Ok(None);
    }
    let score = |pred: &[f64]| -> Result<Score> {
        let (y, p) = observed_pairs(actual, pred);
        Score::compute(&y, &p)
    };
    Ok(Some(TestOutcome {
        actual: actual.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        members: f.members.iter().map(|(_, m)| score(m)).collect::<Result<Vec<_>>>()?,
        ensemble: score(&f.intervals.point)?,
    }))
}

/// Run one slice. `read_test` is called exactly once, after the ensemble
/// decision has been logged.
pub fn run_slice(
    slice_index: usize,
    input: &Series,
    read_test: impl FnOnce() -> Vec<Option<f64>>,
    settings: &SliceSettings,
) -> Result<(SliceArtifacts, WorkflowLog)> {
    let mut log = WorkflowLog::new();
    log.append(
        "ingest",
        "system",
        json!({"slice_index": slice_index, "settings": settings, "values": input.values()}),
    );

    let diagnostics = preprocess::diagnose(input, &DetectionPolicy::default(), &RepairPolicy::default())?;
    log.append("diagnose", "rules", to_value(&diagnostics)?);

    let (choice, preprocess_decision) = advisor::advise_preprocess(input, &diagnostics, &settings.advisor)?;
    let cleaned = preprocess::clean(input, &choice.detection, &choice.repair)?;
    log.append(
        "preprocess",
        &provenance(&preprocess_decision),
        json!({"decision": preprocess_decision, "filled": cleaned.filled, "repaired": cleaned.repaired}),
    );
    let cleaned = cleaned.series;

    let profile = build_profile(&cleaned)?;
    log.append("profile", "rules", to_value(&profile)?);

    let split = SplitSpec::for_window(input.len(), settings.horizon)?;
    let train = cleaned.slice(0, split.train_len)?;
    let val = cleaned.slice(split.train_len, split.input_len())?;

    let (pool, selection) = advisor::advise_models(&profile, settings.pool_size, &settings.advisor)?;
    log.append("select", &provenance(&selection), json!({"decision": selection, "split": split}));

    let records = planner::backtest(&pool, &train, &val, settings.configs_per_model, settings.seed, settings.parallelism)?;
    log.append("backtest", "rules", json!({"records": records}));

    let ranked = planner::rank_top_k(&records, settings.top_k)?;
    log.append("rank", "rules", json!({"top_k": ranked.ids()}));

    let val_forecasts: Vec<Vec<f64>> = ranked.top_k.iter().map(|r| r.val_forecast.clone()).collect();
    let spread = ensemble::disagreement(&val_forecasts, &val.dense()?)?;
    let (decision, evidence, ensemble_decision) =
        advisor::advise_ensemble(&ranked, &settings.ensemble, spread, &settings.advisor)?;
    log.append(
        "ensemble",
        &provenance(&ensemble_decision),
        json!({"decision": ensemble_decision, "evidence": evidence}),
    );

    let forecasting = forecast_stage(&cleaned, split, &ranked, &decision, settings)?;
    log.append(
        "forecast",
        "system",
        json!({"members": forecasting.members, "intervals": forecasting.intervals, "val_ensemble": forecasting.val_ensemble}),
    );

    // The test window is opened here and nowhere else.
    let actual = read_test();
    if actual.len() != settings.horizon {
        return Err(Error::LengthMismatch { left: settings.horizon, right: actual.len() });
    }
    let test = evaluate(&actual, &forecasting)?;
    log.append("evaluate", "system", json!({"actual": actual, "scores": test}));

    let artifacts = SliceArtifacts {
        slice_index,
        horizon: settings.horizon,
        raw: input.clone(),
        cleaned,
        diagnostics,
        preprocess: preprocess_decision,
        profile,
        selection,
        pool,
        records,
        ranked,
        ensemble: ensemble_decision,
        decision,
        evidence,
        members: forecasting.members,
        intervals: forecasting.intervals,
        val_ensemble: forecasting.val_ensemble,
        test,
    };
    Ok((artifacts, log))
}

fn payload<'a>(log: &'a WorkflowLog, stage: &str) -> Result<&'a Value> {
    Ok(&log.only(stage)?.payload)
}

fn field<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<T> {
    let inner = v
        .get(key)
        .ok_or_else(|| Error::Report(format!("log payload lacks `{key}`")))?;
    Ok(serde_json::from_value(inner.clone())?)
}

/// Rebuild a slice from its log: the recorded cleaning policy, candidate
/// pool and ensemble decision are re-applied to the recorded input window.
/// The backtest is re-run and must reproduce the logged records exactly.
pub fn replay(log: &WorkflowLog, parallelism: Parallelism) -> Result<SliceArtifacts> {
    let ingest = payload(log, "ingest")?;
    let slice_index: usize = field(ingest, "slice_index")?;
    let mut settings: SliceSettings = field(ingest, "settings")?;
    settings.parallelism = parallelism;
    let raw = Series::from_options(field(ingest, "values")?)?;

    let diagnostics: QualityDiagnostics = serde_json::from_value(payload(log, "diagnose")?.clone())?;
    let pre = payload(log, "preprocess")?;
    let preprocess_decision: AdvisorDecision = field(pre, "decision")?;
    let (detection, repair) = advisor::preprocess_from_payload(&preprocess_decision.payload)?;
    let cleaned = preprocess::clean(&raw, &detection, &repair)?.series;

    let profile = build_profile(&cleaned)?;
    let logged_profile: TemporalProfile = serde_json::from_value(payload(log, "profile")?.clone())?;
    if profile != logged_profile {
        return Err(Error::Report("replayed profile differs from the log".into()));
    }

    let sel = payload(log, "select")?;
    let selection: AdvisorDecision = field(sel, "decision")?;
    let split: SplitSpec = field(sel, "split")?;
    let pool = advisor::pool_from_payload(&selection.payload, profile.seasonality.period, None)?;
    let train = cleaned.slice(0, split.train_len)?;
    let val = cleaned.slice(split.train_len, split.input_len())?;
    let records = planner::backtest(&pool, &train, &val, settings.configs_per_model, settings.seed, parallelism)?;
    if to_value(&records)? != payload(log, "backtest")?["records"] {
        return Err(Error::Report("replayed backtest differs from the log".into()));
    }
    let ranked = planner::rank_top_k(&records, settings.top_k)?;

    let ens = payload(log, "ensemble")?;
    let ensemble_decision: AdvisorDecision = field(ens, "decision")?;
    let evidence: DecisionEvidence = field(ens, "evidence")?;
    let decision: EnsembleDecision = serde_json::from_value(ensemble_decision.payload.clone())?;

    let forecasting = forecast_stage(&cleaned, split, &ranked, &decision, &settings)?;
    let actual: Vec<Option<f64>> = field(payload(log, "evaluate")?, "actual")?;
    let test = evaluate(&actual, &forecasting)?;

    Ok(SliceArtifacts {
        slice_index,
        horizon: settings.horizon,
        raw,
        cleaned,
        diagnostics,
        preprocess: preprocess_decision,
        profile,
        selection,
        pool,
        records,
        ranked,
        ensemble: ensemble_decision,
        decision,
        evidence,
        members: forecasting.members,
        intervals: forecasting.intervals,
        val_ensemble: forecasting.val_ensemble,
        test,
    })
}

/// Curator stage alone: diagnostics, the advised cleaning, the profile and
/// the three descriptive charts.
#[derive(Debug, Clone, Serialize)]
pub struct CuratorOutput {
    pub diagnostics: QualityDiagnostics,
    pub preprocess: AdvisorDecision,
    pub filled: Vec<usize>,
    pub repaired: Vec<usize>,
    pub profile: TemporalProfile,
    #[serde(skip)]
    pub plots: Vec<(String, String)>,
}

pub fn curate(series: &Series, backend: &AdvisorBackend) -> Result<CuratorOutput> {
    let diagnostics = preprocess::diagnose(series, &DetectionPolicy::default(), &RepairPolicy::default())?;
    let (choice, decision) = advisor::advise_preprocess(series, &diagnostics, backend)?;
    let cleaned = preprocess::clean(series, &choice.detection, &choice.repair)?;
    let profile = build_profile(&cleaned.series)?;
    let plots = reporter::curator_plots(series, &cleaned.series, &profile)?;
    Ok(CuratorOutput {
        diagnostics,
        preprocess: decision,
        filled: cleaned.filled,
        repaired: cleaned.repaired,
        profile,
        plots,
    })
}

/// Forecast recorded in a log, for replay comparisons.
pub fn logged_forecast(log: &WorkflowLog) -> Result<Vec<f64>> {
    let intervals: IntervalForecast = field(payload(log, "forecast")?, "intervals")?;
    Ok(intervals.point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub horizon: usize,
    pub slice: usize,
    pub start: usize,
    pub status: String,
    pub strategy: Option<String>,
    pub members: Vec<String>,
    pub ensemble: Option<Score>,
    /// Aligned with `members`.
    pub member_scores: Vec<Score>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub horizon: String,
    pub slices_ok: usize,
    pub slices_failed: usize,
    pub mae: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub results: Vec<SliceResult>,
    pub aggregate: Vec<HorizonSummary>,
    pub warnings: Vec<String>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Mean test MAE/MAPE per horizon over slices with a test score, then the
/// plain average of the per-horizon means.
pub fn aggregate(results: &[SliceResult], horizons: &[usize]) -> Vec<HorizonSummary> {
    let mut rows: Vec<HorizonSummary> = horizons
        .iter()
        .map(|&h| {
            let these: Vec<&SliceResult> = results.iter().filter(|r| r.horizon == h).collect();
            let scored: Vec<Score> = these.iter().filter_map(|r| r.ensemble).collect();
            let maes: Vec<f64> = scored.iter().map(|s| s.mae).collect();
            let mapes: Vec<f64> = scored.iter().filter_map(|s| s.mape).collect();
            HorizonSummary {
                horizon: h.to_string(),
                slices_ok: scored.len(),
                slices_failed: these.len() - scored.len(),
                mae: mean(&maes),
                mape: mean(&mapes),
            }
        })
        .collect();
    if rows.len() > 1 {
        let avg = HorizonSummary {
            horizon: "avg".into(),
            slices_ok: rows.iter().map(|r| r.slices_ok).sum(),
            slices_failed: rows.iter().map(|r| r.slices_failed).sum(),
            mae: mean(&rows.iter().map(|r| r.mae).collect::<Vec<_>>()),
            mape: mean(&rows.iter().map(|r| r.mape).collect::<Vec<_>>()),
        };
        rows.push(avg);
    }
    rows
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| Error::Report(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

fn num(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(String::new, |x| x.to_string())
}

pub fn slices_csv(results: &[SliceResult]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["horizon", "slice", "start", "status", "strategy", "members", "test_mae", "test_mape", "error"])?;
        for r in results {
            w.write_record([
                r.horizon.to_string(),
                r.slice.to_string(),
                r.start.to_string(),
                r.status.clone(),
                r.strategy.clone().unwrap_or_default(),
                r.members.join(";"),
                num(r.ensemble.map(|s| s.mae)),
                num(r.ensemble.and_then(|s| s.mape)),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

pub fn aggregate_csv(rows: &[HorizonSummary]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["horizon", "slices_ok", "slices_failed", "mae", "mape"])?;
        for r in rows {
            w.write_record([
                r.horizon.clone(),
                r.slices_ok.to_string(),
                r.slices_failed.to_string(),
                r.mae.to_string(),
                r.mape.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn slice_dir(out: &Path, horizon: usize, slice: usize) -> PathBuf {
    out.join(format!("h{horizon}")).join(format!("slice_{slice:02}"))
}

/// Run a slice end to end and write its bundle; errors are returned, not
/// raised, so one bad slice cannot stop the run.
fn run_and_write(window: &SliceWindow, settings: &SliceSettings, out: &Path) -> SliceResult {
    let mut result = SliceResult {
        horizon: settings.horizon,
        slice: window.index,
        start: window.start,
        status: "failed".into(),
        strategy: None,
        members: Vec::new(),
        ensemble: None,
        member_scores: Vec::new(),
        error: None,
    };
    let outcome = run_slice(window.index, &window.input, || window.test.clone(), settings).and_then(|(a, mut log)| {
        let bundle = reporter::render_report(&a, &log)?;
        let dir = slice_dir(out, settings.horizon, window.index);
        log.append(
            "report",
            "system",
            json!({"files": ["report.md", "plots/overview.svg", "plots/decomposition.svg", "plots/correlogram.svg", "plots/ensemble_forecast.svg", "metrics.csv"]}),
        );
        let bundle = reporter::ReportBundle { workflow_log: log, ..bundle };
        bundle.write_to(&dir)?;
        Ok(a)
    });
    match outcome {
        Ok(a) => {
            result.status = "ok".into();
            result.strategy = Some(a.decision.integration_strategy.to_string());
            result.members = a.members.iter().map(|(n, _)| n.clone()).collect();
            result.ensemble = a.test.as_ref().map(|t| t.ensemble);
            result.member_scores = a.test.map(|t| t.members).unwrap_or_default();
        }
        Err(e) => {
            let dir = slice_dir(out, settings.horizon, window.index);
            let _ = std::fs::create_dir_all(&dir);
            let _ = std::fs::write(dir.join("error.txt"), format!("{e}\n"));
            result.error = Some(e.to_string());
        }
    }
    result
}

/// Full run: every horizon, every slice, then per-slice and aggregate CSVs.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let series = ingest_csv(&cfg.input, &cfg.column)?;
    run_on_series(&series, cfg)
}

pub fn run_on_series(series: &Series, cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for &h in &cfg.horizons {
        let slicing = make_slices(series, cfg.input_length, h, cfg.slices)?;
        if let Some(w) = slicing.warning {
            eprintln!("warning: horizon {h}: {w}");
            warnings.push(format!("horizon {h}: {w}"));
        }
        let settings = SliceSettings::from_config(cfg, h);
        results.extend(par::map(cfg.parallelism(), &slicing.windows, |w| {
            run_and_write(w, &settings, &cfg.out)
        }));
    }
    let aggregate = aggregate(&results, &cfg.horizons);
    std::fs::write(cfg.out.join("slices.csv"), slices_csv(&results)?)?;
    std::fs::write(cfg.out.join("aggregate.csv"), aggregate_csv(&aggregate)?)?;
    Ok(RunSummary {
        results,
        aggregate,
        warnings,
    })
}

/// Re-render a slice directory from its log alone.
pub fn rerender(dir: &Path) -> Result<reporter::ReportBundle> {
    let log = WorkflowLog::read(&dir.join("log.ndjson"))?;
    let artifacts = replay(&log, Parallelism::Auto)?;
    if artifacts.intervals.point != logged_forecast(&log)? {
        return Err(Error::Report("replayed forecast differs from the log".into()));
    }
    let bundle = reporter::render_report(&artifacts, &log)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(name: &str, body: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("autoforecast-pipeline-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("in.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn ingest_examples() {
        let p = write_tmp("ok", "t,value\n0,1\n1,2\n2,3\n");
        assert_eq!(ingest_csv(&p, "value").unwrap().observed(), vec![1.0, 2.0, 3.0]);
        let p = write_tmp("gap", "t,value\n0,1\n1,\n2,3\n");
        let s = ingest_csv(&p, "value").unwrap();
        assert_eq!(s.missing_indices(), vec![1]);
        let p = write_tmp("bad", "t,value\n0,1\n1,abc\n");
        match ingest_csv(&p, "value") {
            Err(Error::Csv { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(ingest_csv(&p, "nope"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn slicing_examples() {
        let (t, h) = (64, 8);
        let exact = Series::from_values(&vec![1.0; t + h]).unwrap();
        let s = make_slices(&exact, t, h, 25).unwrap();
        assert_eq!(s.windows.len(), 1);
        assert_eq!(s.windows[0].start, 0);
        assert!(s.warning.is_some());

        let longer = Series::from_values(&vec![1.0; t + h + 24]).unwrap();
        let s = make_slices(&longer, t, h, 25).unwrap();
        assert_eq!(s.windows.iter().map(|w| w.start).collect::<Vec<_>>(), (0..25).collect::<Vec<_>>());
        assert!(s.warning.is_none());
        for w in &s.windows {
            assert_eq!(w.input.len() + w.test.len(), t + h);
        }

        let s = make_slices(&Series::from_values(&vec![1.0; 1000]).unwrap(), t, h, 3).unwrap();
        assert_eq!(s.windows.iter().map(|w| w.start).collect::<Vec<_>>(), vec![0, 464, 928]);
        assert!(make_slices(&exact, t, h + 1, 1).is_err());
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = RunConfig::default();
        assert_eq!((cfg.slices, cfg.input_length), (25, 512));
        assert_eq!(cfg.horizons, vec![96, 192, 336, 720]);
        assert!(cfg.validate().is_ok());
        let cfg = RunConfig::from_toml("slices = 3\nhorizons = [24]\n[ensemble]\ndelta = 0.1\n").unwrap();
        assert_eq!(cfg.slices, 3);
        assert_eq!(cfg.ensemble.delta, 0.1);
        assert_eq!(cfg.ensemble.lambda, 0.1);
        assert!(RunConfig::from_toml("slice = 3").is_err());
        let short = RunConfig {
            input_length: 32,
            ..RunConfig::default()
        };
        assert!(short.validate().is_err());
    }

    #[test]
    fn aggregate_is_plain_mean() {
        let r = |h, mae, mape| SliceResult {
            horizon: h,
            slice: 0,
            start: 0,
            status: "ok".into(),
            strategy: None,
            members: vec![],
            ensemble: Some(Score { mae, mape: Some(mape) }),
            member_scores: vec![],
            error: None,
        };
        let rows = aggregate(&[r(24, 1.0, 10.0), r(24, 3.0, 20.0), r(48, 5.0, 30.0)], &[24, 48]);
        assert_eq!(rows[0].mae, 2.0);
        assert_eq!(rows[1].mape, 30.0);
        assert_eq!(rows[2].horizon, "avg");
        assert_eq!(rows[2].mae, 3.5);
    }
}
