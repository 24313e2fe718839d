//! Report bundle: prediction intervals, the Markdown report, SVG charts,
//! the metrics table and the workflow log.

pub mod log;
pub mod svg;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::advisor::{AdvisorDecision, Source};
use crate::ensemble::{DecisionEvidence, EnsembleDecision, Strategy};
use crate::error::{Error, Result};
use crate::planner::{BacktestRecord, CandidatePool, RankedModels};
use crate::preprocess::QualityDiagnostics;
use crate::profile::{acf_pacf, decompose, rolling_stats, TemporalProfile};
use crate::series::{mae, mape, Series};

pub use log::{LogEvent, WorkflowLog, LOG_SCHEMA_VERSION};

pub const SECTIONS: [&str; 5] = [
    "Forecast",
    "Performance Summary",
    "Interpretability",
    "Visualizations",
    "Workflow Documentation",
];
pub const PLOTS: [&str; 4] = ["overview", "decomposition", "correlogram", "ensemble_forecast"];
pub const ROLLING_WINDOW: usize = 24;
pub const CORRELOGRAM_LAGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalForecast {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

/// Two-sided Gaussian quantile for a percentage level.
pub fn z_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 100.0) {
        return Err(Error::InvalidParameter(format!("interval level must be in (0, 100), got {level}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 200.0))
}

/// Half-width `z * sqrt(var_h + sigma^2)` around `point`, where `var_h` is
/// the population variance of the member forecasts at step h and `sigma` the
/// validation residual standard deviation.
pub fn build_intervals(point: &[f64], members: &[Vec<f64>], val_residual_std: f64, level: f64) -> Result<IntervalForecast> {
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(val_residual_std >= 0.0 && val_residual_std.is_finite()) {
        return Err(Error::InvalidParameter(format!("residual std must be finite and >= 0, got {val_residual_std}")));
    }
    let h = point.len();
    if let Some(m) = members.iter().find(|m| m.len() != h) {
        return Err(Error::LengthMismatch { left: h, right: m.len() });
    }
    let z = z_value(level)?;
    let k = members.len() as f64;
    let mut lower = Vec::with_capacity(h);
    let mut upper = Vec::with_capacity(h);
    for (t, p) in point.iter().enumerate() {
        let mean = members.iter().map(|m| m[t]).sum::<f64>() / k;
        let var = members.iter().map(|m| (m[t] - mean).powi(2)).sum::<f64>() / k;
        let half = z * (var + val_residual_std * val_residual_std).sqrt();
        lower.push(p - half);
        upper.push(p + half);
    }
    Ok(IntervalForecast {
        point: point.to_vec(),
        lower,
        upper,
        level,
    })
}

/// Test-window scores; MAPE is absent when every target is near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mae: f64,
    pub mape: Option<f64>,
}

impl Score {
    pub fn compute(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        let mape = match mape(actual, predicted) {
            Ok(v) => Some(v),
            Err(Error::MapeUndefined) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            mae: mae(actual, predicted)?,
            mape,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub actual: Vec<f64>,
    /// Aligned with `SliceArtifacts::members`.
    pub members: Vec<Score>,
    pub ensemble: Score,
}

/// Everything a slice produced, in the order it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceArtifacts {
    pub slice_index: usize,
    pub horizon: usize,
    pub raw: Series,
    pub cleaned: Series,
    pub diagnostics: QualityDiagnostics,
    pub preprocess: AdvisorDecision,
    pub profile: TemporalProfile,
    pub selection: AdvisorDecision,
    pub pool: CandidatePool,
    pub records: Vec<BacktestRecord>,
    pub ranked: RankedModels,
    pub ensemble: AdvisorDecision,
    pub decision: EnsembleDecision,
    pub evidence: DecisionEvidence,
    /// Final member forecasts over the test horizon, original units.
    pub members: Vec<(String, Vec<f64>)>,
    pub intervals: IntervalForecast,
    pub val_ensemble: Score,
    pub test: Option<TestOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub report_markdown: String,
    /// (name, SVG document), in `PLOTS` order.
    pub plots: Vec<(String, String)>,
    pub workflow_log: WorkflowLog,
    pub metrics_csv: String,
}

impl ReportBundle {
    pub fn plot(&self, name: &str) -> Option<&str> {
        self.plots.iter().find(|(n, _)| n == name).map(|(_, s)| s.as_str())
    }

    /// Write report.md, plots/*.svg, log.ndjson and metrics.csv into `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("plots"))?;
        std::fs::write(dir.join("report.md"), &self.report_markdown)?;
        for (name, doc) in &self.plots {
            std::fs::write(dir.join("plots").join(format!("{name}.svg")), doc)?;
        }
        self.workflow_log.write(&dir.join("log.ndjson"))?;
        std::fs::write(dir.join("metrics.csv"), &self.metrics_csv)?;
        Ok(())
    }
}

/// Four significant figures; scientific notation outside [1e-3, 1e5).
pub fn sig4(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "n/a".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-3..5).contains(&mag) {
        return format!("{v:.3e}");
    }
    let decimals = (3 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new digit (9.9996 -> 10.000).
    let digits = s.trim_start_matches('-').replace('.', "");
    let significant = digits.trim_start_matches('0').len();
    if significant > 4 && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), sig4)
}

fn source_note(d: &AdvisorDecision) -> String {
    match d.source {
        Source::Rules => "rule table".into(),
        Source::Llm => "language model".into(),
        Source::LlmFallback => format!(
            "rule table (language model answer rejected: {})",
            d.error.as_deref().unwrap_or("unknown error")
        ),
    }
}

/// Metrics table as CSV: one row per top-k member plus the ensemble.
pub fn metrics_csv(a: &SliceArtifacts) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(["model_id", "params", "val_mae", "val_mape", "test_mae", "test_mape"])
        .map_err(csv_err)?;
    let fmt_opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for (i, r) in a.ranked.top_k.iter().enumerate() {
        let test = a.test.as_ref().map(|t| t.members[i]);
        w.write_record([
            r.spec.model_id.to_string(),
            r.spec.params_json(),
            r.val_mae.to_string(),
            r.val_mape.to_string(),
            fmt_opt(test.map(|s| s.mae)),
            fmt_opt(test.and_then(|s| s.mape)),
        ])
        .map_err(csv_err)?;
    }
    let test = a.test.as_ref().map(|t| t.ensemble);
    w.write_record([
        "ensemble".to_string(),
        serde_json::to_string(&serde_json::json!({
            "strategy": a.decision.integration_strategy,
            "weights": a.decision.weights,
            "selected_model": a.decision.selected_model,
        }))?,
        a.val_ensemble.mae.to_string(),
        fmt_opt(a.val_ensemble.mape),
        fmt_opt(test.map(|s| s.mae)),
        fmt_opt(test.and_then(|s| s.mape)),
    ])
    .map_err(csv_err)?;
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Draw the four charts from the slice data.
/// Overview, decomposition and correlogram of one window.
pub fn curator_plots(raw: &Series, cleaned: &Series, profile: &TemporalProfile) -> Result<Vec<(String, String)>> {
    let n = cleaned.len();
    let rolling = rolling_stats(cleaned, ROLLING_WINDOW.min(n).max(2))?;
    let period = profile.seasonality.period.unwrap_or(24).min(n / 2).max(2);
    let decomposition = decompose(cleaned, period)?;
    let correlogram = acf_pacf(cleaned, CORRELOGRAM_LAGS.min(n.saturating_sub(1)))?;
    Ok(vec![
        ("overview".into(), svg::overview(raw.values(), &rolling)),
        ("decomposition".into(), svg::decomposition(&decomposition)),
        ("correlogram".into(), svg::correlogram(&correlogram)),
    ])
}

pub fn render_plots(a: &SliceArtifacts) -> Result<Vec<(String, String)>> {
    let history = a.cleaned.dense()?;
    let forecast = svg::ensemble_forecast(&svg::ForecastPlot {
        history: &history,
        members: &a.members,
        ensemble: &a.intervals.point,
        lower: &a.intervals.lower,
        upper: &a.intervals.upper,
        level: a.intervals.level,
        actual: a.test.as_ref().map(|t| t.actual.as_slice()),
    })?;
    let mut plots = curator_plots(&a.raw, &a.cleaned, &a.profile)?;
    plots.push(("ensemble_forecast".into(), forecast));
    Ok(plots)
}

fn forecast_section(out: &mut String, a: &SliceArtifacts) {
    let iv = &a.intervals;
    let _ = writeln!(out, "## Forecast\n");
    let _ = writeln!(
        out,
        "Ensemble forecast for the next {} steps with {}% prediction intervals.\n",
        a.horizon,
        sig4(iv.level)
    );
    let _ = writeln!(out, "| step | forecast | lower | upper |");
    let _ = writeln!(out, "|---:|---:|---:|---:|");
    for t in 0..iv.point.len() {
        let _ = writeln!(out, "| {} | {} | {} | {} |", t + 1, sig4(iv.point[t]), sig4(iv.lower[t]), sig4(iv.upper[t]));
    }
    out.push('\n');
}

fn performance_section(out: &mut String, a: &SliceArtifacts) {
    let _ = writeln!(out, "## Performance Summary\n");
    let _ = writeln!(out, "| model | parameters | val MAE | val MAPE (%) | test MAE | test MAPE (%) |");
    let _ = writeln!(out, "|---|---|---:|---:|---:|---:|");
    for (i, r) in a.ranked.top_k.iter().enumerate() {
        let test = a.test.as_ref().map(|t| t.members[i]);
        let _ = writeln!(
            out,
            "| {} | `{}` | {} | {} | {} | {} |",
            r.spec.model_id,
            r.spec.params_json(),
            sig4(r.val_mae),
            sig4(r.val_mape),
            opt4(test.map(|s| s.mae)),
            opt4(test.and_then(|s| s.mape)),
        );
    }
    let test = a.test.as_ref().map(|t| t.ensemble);
    let _ = writeln!(
        out,
        "| **ensemble** | {} | {} | {} | {} | {} |\n",
        a.decision.integration_strategy,
        sig4(a.val_ensemble.mae),
        opt4(a.val_ensemble.mape),
        opt4(test.map(|s| s.mae)),
        opt4(test.and_then(|s| s.mape)),
    );
    match &a.test {
        Some(t) => {
            let best = t
                .members
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.mae.total_cmp(&y.1.mae))
                .map(|(i, s)| (a.members[i].0.as_str(), s.mae));
            if let Some((name, best_mae)) = best {
                let _ = writeln!(
                    out,
                    "Key findings: the ensemble reached a test MAE of {} against {} for the best single member ({name}).\n",
                    sig4(t.ensemble.mae),
                    sig4(best_mae)
                );
            }
        }
        None => {
            let _ = writeln!(out, "No test window was supplied; only validation metrics are shown.\n");
        }
    }
}

fn interpretability_section(out: &mut String, a: &SliceArtifacts) {
    let d = &a.diagnostics;
    let _ = writeln!(out, "## Interpretability\n");
    let _ = writeln!(out, "### Data quality\n");
    let _ = writeln!(
        out,
        "- {} of {} points missing ({}%), {} flagged as outliers; quality score {}.",
        d.missing_indices.len(),
        d.len,
        sig4(100.0 * d.missing_fraction()),
        d.outlier_indices.len(),
        sig4(d.quality_score)
    );
    let strategies = &a.preprocess.payload["recommended_strategies"];
    let _ = writeln!(
        out,
        "- Cleaning policy ({}): missing values `{}`, detection `{}`, outlier handling `{}`.",
        source_note(&a.preprocess),
        strategies["missing_value_strategy"].as_str().unwrap_or("?"),
        strategies["outlier_detect_strategy"].as_str().unwrap_or("?"),
        strategies["outlier_handle_strategy"].as_str().unwrap_or("?"),
    );
    if let Some(r) = a.preprocess.payload["rationale"].as_str() {
        let _ = writeln!(out, "- Rationale: {r}.");
    }
    let p = &a.profile;
    let _ = writeln!(out, "\n### Temporal profile\n");
    let _ = writeln!(out, "- Trend: {} (strength {}, slope {} per step).", p.trend.label, sig4(p.trend.strength), sig4(p.trend.slope));
    match p.seasonality.period {
        Some(period) if p.seasonality.detected => {
            let _ = writeln!(out, "- Seasonality: period {period}, strength {}.", sig4(p.seasonality.strength));
        }
        _ => {
            let _ = writeln!(out, "- Seasonality: none detected.");
        }
    }
    match &p.stationarity {
        Some(s) => {
            let _ = writeln!(
                out,
                "- Stationarity: {} (ADF statistic {} vs critical value {}).",
                if s.is_stationary { "stationary" } else { "non-stationary" },
                sig4(s.statistic),
                sig4(s.critical_value)
            );
        }
        None => {
            let _ = writeln!(out, "- Stationarity: test regression degenerate; treated as non-stationary.");
        }
    }
    let _ = writeln!(out, "- Share of zeros: {}.", sig4(p.intermittency));

    let _ = writeln!(out, "\n### Model selection ({})\n", source_note(&a.selection));
    for c in &a.pool.candidates {
        let _ = writeln!(out, "- **{}**: {}", c.model_id, c.rationale);
    }
    let failed: Vec<&BacktestRecord> = a.records.iter().filter(|r| !r.is_ok()).collect();
    for r in failed {
        let _ = writeln!(
            out,
            "- {} failed on validation and was excluded: {}",
            r.spec.model_id,
            r.failure.as_deref().unwrap_or("no usable forecast")
        );
    }

    let dec = &a.decision;
    let ev = &a.evidence;
    let _ = writeln!(out, "\n### Ensemble decision ({})\n", source_note(&a.ensemble));
    let _ = writeln!(out, "- Strategy: `{}`; confidence {}.", dec.integration_strategy, dec.confidence);
    let _ = writeln!(
        out,
        "- Leader gap {} and disagreement index {} on the validation window.",
        sig4(ev.gap),
        sig4(ev.disagreement)
    );
    if dec.integration_strategy == Strategy::SingleBest {
        let _ = writeln!(
            out,
            "- Selected model: **{}** (gap {}).",
            dec.selected_model.as_deref().unwrap_or("?"),
            sig4(ev.gap)
        );
    }
    if let Some(w) = &dec.weights {
        let list: Vec<String> = w.iter().map(|(k, v)| format!("{k} {}", sig4(*v))).collect();
        let _ = writeln!(out, "- Weights: {}.", list.join(", "));
    }
    if a.ensemble.source == Source::Llm {
        let _ = writeln!(out, "\n> Language model reasoning (verbatim): {}\n", dec.reasoning);
    } else {
        let _ = writeln!(out, "- Reasoning: {}\n", dec.reasoning);
    }
}

fn visual_section(out: &mut String) {
    let captions = [
        "Raw series with its rolling mean and rolling standard deviation.",
        "Observed series split into trend, seasonal and residual parts.",
        "Autocorrelation and partial autocorrelation with the white-noise band.",
        "Recent history, member forecasts, the ensemble and its interval band.",
    ];
    let _ = writeln!(out, "## Visualizations\n");
    for (name, caption) in PLOTS.iter().zip(captions) {
        let _ = writeln!(out, "![{name}](plots/{name}.svg)\n\n{caption}\n");
    }
}

fn workflow_section(out: &mut String, log: &WorkflowLog) {
    let _ = writeln!(out, "## Workflow Documentation\n");
    let _ = writeln!(out, "Every decision is recorded in `log.ndjson`. Stages in order:\n");
    for e in log.events().iter().filter(|e| e.stage != "report") {
        let _ = writeln!(out, "{}. `{}` ({})", e.seq, e.stage, e.provenance);
    }
}

/// Markdown report with the five fixed sections. Timestamps are left out so
/// identical inputs give identical bytes.
pub fn render_markdown(a: &SliceArtifacts, log: &WorkflowLog) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Forecast report: slice {}, horizon {}\n", a.slice_index, a.horizon);
    forecast_section(&mut out, a);
    performance_section(&mut out, a);
    interpretability_section(&mut out, a);
    visual_section(&mut out);
    workflow_section(&mut out, log);
    out
}

pub fn render_report(a: &SliceArtifacts, log: &WorkflowLog) -> Result<ReportBundle> {
    if a.ranked.top_k.is_empty() || a.members.len() != a.ranked.top_k.len() {
        return Err(Error::Report("ranked members and final forecasts disagree".into()));
    }
    if let Some(t) = &a.test {
        if t.members.len() != a.members.len() {
            return Err(Error::Report("test scores do not cover every member".into()));
        }
    }
    Ok(ReportBundle {
        report_markdown: render_markdown(a, log),
        plots: render_plots(a)?,
        workflow_log: log.clone(),
        metrics_csv: metrics_csv(a)?,
    })
}
