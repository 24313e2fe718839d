//! Decision layer. Each of the three choices (preprocessing policy, model
//! pool, ensemble strategy) is made by a deterministic rule table, or by an
//! external chat model whose answer is parsed, schema-checked and
//! semantically checked. Any failure on the model path falls back to the
//! rule decision, so the advisor never aborts a run.

pub mod llm;
pub mod prompts;
pub mod rules;
pub mod schema;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ensemble::{self, DecisionEvidence, EnsembleConfig, EnsembleDecision, Strategy};
use crate::error::{Error, Result};
use crate::models::{hyperparameter_space_for, HyperValue, HyperparameterSpace, ModelId, ModelSpec};
use crate::planner::{Candidate, CandidatePool, RankedModels};
use crate::preprocess::{
    DetectionMethod, DetectionPolicy, MissingFill, OutlierHandle, QualityDiagnostics, RepairPolicy,
};
use crate::profile::TemporalProfile;
use crate::series::Series;

pub use llm::Exchange;
pub use rules::PreprocessChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Preprocess,
    ModelSelection,
    Ensemble,
}

impl DecisionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionKind::Preprocess => "preprocess",
            DecisionKind::ModelSelection => "model_selection",
            DecisionKind::Ensemble => "ensemble",
        }
    }
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Rules,
    Llm,
    LlmFallback,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Rules => "rules",
            Source::Llm => "llm",
            Source::LlmFallback => "llm_fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvisorMode {
    #[default]
    Rules,
    Llm,
}

impl std::str::FromStr for AdvisorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rules" => Ok(AdvisorMode::Rules),
            "llm" => Ok(AdvisorMode::Llm),
            other => Err(Error::Config(format!("advisor mode must be rules or llm, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvisorBackend {
    pub mode: AdvisorMode,
    pub endpoint: String,
    pub model_name: String,
    pub timeout_secs: f64,
    pub max_retries: usize,
    /// Environment variable holding the bearer credential.
    pub api_key_env: String,
    /// Explicit credential, never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for AdvisorBackend {
    fn default() -> Self {
        Self {
            mode: AdvisorMode::Rules,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o".into(),
            timeout_secs: 60.0,
            max_retries: 2,
            api_key_env: "AUTOFORECAST_API_KEY".into(),
            api_key: None,
        }
    }
}

impl AdvisorBackend {
    pub fn rules() -> Self {
        Self::default()
    }

    pub fn credential(&self) -> Option<String> {
        self.api_key
            .clone()
            .or_else(|| std::env::var(&self.api_key_env).ok())
            .filter(|k| !k.is_empty())
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == AdvisorMode::Rules {
            return Ok(());
        }
        if self.endpoint.trim().is_empty() {
            return Err(Error::Config("llm advisor needs an endpoint".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::Config("advisor timeout must be positive".into()));
        }
        if self.credential().is_none() {
            return Err(Error::Config(format!(
                "llm advisor needs a credential in ${}",
                self.api_key_env
            )));
        }
        Ok(())
    }
}

/// One advisor decision as logged. `payload` always validates against the
/// schema of `kind`; on fallback it is the rule decision and the failed
/// answer is kept in `raw_response` with the reason in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorDecision {
    pub kind: DecisionKind,
    pub source: Source,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange: Option<Exchange>,
}

impl AdvisorDecision {
    fn rules(kind: DecisionKind, payload: Value) -> Self {
        Self {
            kind,
            source: Source::Rules,
            payload,
            raw_response: None,
            error: None,
            exchange: None,
        }
    }
}

// Wire vocabularies.

pub fn missing_wire(m: MissingFill) -> &'static str {
    match m {
        MissingFill::Interpolate => "interpolate",
        MissingFill::Ffill => "forward_fill",
        MissingFill::Bfill => "backward_fill",
        MissingFill::LocalMean => "mean",
        MissingFill::LocalMedian => "median",
        MissingFill::Zero => "zero",
        MissingFill::Drop => "drop",
    }
}

pub fn handle_wire(h: OutlierHandle) -> &'static str {
    match h {
        OutlierHandle::Clip => "clip",
        OutlierHandle::Interpolate => "interpolate",
        OutlierHandle::Ffill => "ffill",
        OutlierHandle::Bfill => "bfill",
        OutlierHandle::LocalMean => "mean",
        OutlierHandle::LocalMedian => "median",
        OutlierHandle::Smooth => "smooth",
        OutlierHandle::Zero => "zero",
        OutlierHandle::Drop => "drop",
    }
}

pub fn detect_wire(m: DetectionMethod) -> &'static str {
    match m {
        DetectionMethod::RollingIqr => "iqr",
        DetectionMethod::RollingZscore => "zscore",
        DetectionMethod::Percentile => "percentile",
        DetectionMethod::None => "none",
    }
}

fn parse_missing(s: &str) -> Result<MissingFill> {
    Ok(match s {
        "interpolate" => MissingFill::Interpolate,
        "forward_fill" => MissingFill::Ffill,
        "backward_fill" => MissingFill::Bfill,
        "mean" => MissingFill::LocalMean,
        "median" => MissingFill::LocalMedian,
        "zero" => MissingFill::Zero,
        "drop" => return Err(Error::Advisor("missing strategy drop breaks contiguous indexing".into())),
        other => return Err(Error::Advisor(format!("unknown missing strategy `{other}`"))),
    })
}

fn parse_handle(s: &str) -> Result<OutlierHandle> {
    Ok(match s {
        "clip" => OutlierHandle::Clip,
        "interpolate" => OutlierHandle::Interpolate,
        "ffill" => OutlierHandle::Ffill,
        "bfill" => OutlierHandle::Bfill,
        "mean" => OutlierHandle::LocalMean,
        "median" => OutlierHandle::LocalMedian,
        "smooth" => OutlierHandle::Smooth,
        "zero" => OutlierHandle::Zero,
        "drop" => return Err(Error::Advisor("outlier handle drop breaks contiguous indexing".into())),
        other => return Err(Error::Advisor(format!("unknown outlier handle `{other}`"))),
    })
}

fn parse_detect(s: &str) -> Result<DetectionPolicy> {
    let base = DetectionPolicy::default();
    Ok(match s {
        "iqr" => base,
        "zscore" => DetectionPolicy {
            method: DetectionMethod::RollingZscore,
            alpha: 3.0,
            robust_center: false,
            ..base
        },
        "percentile" => DetectionPolicy {
            method: DetectionMethod::Percentile,
            ..base
        },
        "none" => DetectionPolicy {
            method: DetectionMethod::None,
            ..base
        },
        other => return Err(Error::Advisor(format!("unknown detection strategy `{other}`"))),
    })
}

fn str_at<'a>(v: &'a Value, ptr: &str) -> Result<&'a str> {
    v.pointer(ptr)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Advisor(format!("missing string at {ptr}")))
}

// Preprocessing.

/// Rule payload in the data-analysis shape, plus the exact typed policy
/// under `policy` so a replay does not depend on the wire mapping.
pub fn preprocess_payload(diag: &QualityDiagnostics, choice: &PreprocessChoice) -> Value {
    let heavy = diag.stats.excess_kurtosis > rules::HEAVY_TAIL_KURTOSIS
        || diag.stats.skewness.abs() > rules::HEAVY_TAIL_SKEW;
    let mut issues = Vec::new();
    if !diag.missing_indices.is_empty() {
        issues.push("missing_values");
    }
    if !diag.outlier_indices.is_empty() {
        issues.push("outliers");
    }
    if heavy {
        issues.push("heavy_tails");
    }
    json!({
        "basic_stats": {
            "mean": diag.stats.mean,
            "std": diag.stats.std,
            "min": diag.stats.min,
            "max": diag.stats.max,
            "trend": diag.stats.trend,
        },
        "missing_info": {
            "missing_count": diag.missing_indices.len(),
            "missing_percentage": 100.0 * diag.missing_fraction(),
        },
        "outlier_info": {
            "outlier_count": diag.outlier_indices.len(),
            "outlier_percentage": diag.outlier_fraction(),
        },
        "quality_assessment": {
            "data_quality_score": diag.quality_score,
            "main_issues": issues,
        },
        "recommended_strategies": {
            "missing_value_strategy": missing_wire(choice.repair.missing_fill),
            "outlier_detect_strategy": detect_wire(choice.detection.method),
            "outlier_handle_strategy": handle_wire(choice.repair.outlier_handle),
        },
        "rationale": choice.rationale,
        "policy": {"detection": choice.detection, "repair": choice.repair},
    })
}

/// Policies carried by a preprocess payload. The typed `policy` object wins
/// when present; otherwise the wire strategy names are mapped.
pub fn preprocess_from_payload(payload: &Value) -> Result<(DetectionPolicy, RepairPolicy)> {
    if let Some(policy) = payload.get("policy") {
        let detection: DetectionPolicy = serde_json::from_value(policy["detection"].clone())?;
        let repair: RepairPolicy = serde_json::from_value(policy["repair"].clone())?;
        detection.validate()?;
        repair.validate()?;
        return Ok((detection, repair));
    }
    let detection = parse_detect(str_at(payload, "/recommended_strategies/outlier_detect_strategy")?)?;
    let repair = RepairPolicy {
        missing_fill: parse_missing(str_at(payload, "/recommended_strategies/missing_value_strategy")?)?,
        outlier_handle: parse_handle(str_at(payload, "/recommended_strategies/outlier_handle_strategy")?)?,
        ..RepairPolicy::default()
    };
    Ok((detection, repair))
}

/// Series as a column dict, missing points as null.
fn sample_json(series: &Series) -> String {
    let values: Vec<Value> = series.values().iter().map(|v| json!(v)).collect();
    serde_json::to_string(&json!({ "value": values })).unwrap_or_default()
}

pub fn advise_preprocess(
    series: &Series,
    diag: &QualityDiagnostics,
    backend: &AdvisorBackend,
) -> Result<(PreprocessChoice, AdvisorDecision)> {
    let choice = rules::preprocess_policy(diag)?;
    let payload = preprocess_payload(diag, &choice);
    let rule = AdvisorDecision::rules(DecisionKind::Preprocess, payload);
    if backend.mode == AdvisorMode::Rules {
        return Ok((choice, rule));
    }
    let user = prompts::data_analysis(&sample_json(series));
    let (picked, decision) = via_llm(backend, prompts::PREPROCESS_SYSTEM, &user, (choice, rule), |v| {
        let (detection, repair) = preprocess_from_payload(v)?;
        let mut payload = v.clone();
        payload["policy"] = json!({"detection": detection, "repair": repair});
        let choice = PreprocessChoice {
            detection,
            repair,
            rationale: "recommended by the language model".into(),
        };
        Ok((choice, payload))
    });
    Ok((picked, decision))
}

// Model selection.

fn space_from_json(id: ModelId, value: &Value, period: Option<usize>) -> Result<HyperparameterSpace> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Advisor(format!("{id}: hyperparameters must be an object")))?;
    if obj.is_empty() {
        return Ok(hyperparameter_space_for(id, period));
    }
    let mut params = Vec::with_capacity(obj.len());
    for (name, list) in obj {
        let values: Vec<HyperValue> = serde_json::from_value(list.clone())
            .map_err(|e| Error::Advisor(format!("{id}.{name}: {e}")))?;
        if values.is_empty() {
            return Err(Error::Advisor(format!("{id}.{name}: empty search list")));
        }
        params.push((name.clone(), values));
    }
    let mut space = HyperparameterSpace { params };
    let seasonal_on = space
        .get("seasonal")
        .is_some_and(|v| v.iter().any(|x| x.as_bool() == Some(true)));
    if id == ModelId::ExpSmoothing && seasonal_on && space.get("period").is_none() {
        let p = period.ok_or_else(|| {
            Error::Advisor("seasonal exp_smoothing proposed but no period is known".into())
        })?;
        space.params.push(("period".into(), vec![HyperValue::Int(p as i64)]));
    }
    // Each value is checked alone, with a period present so the seasonal
    // flag can be judged.
    let period_value = space.get("period").and_then(|v| v.first().copied());
    for (name, values) in &space.params {
        for v in values {
            let mut params = vec![(name.as_str(), *v)];
            if let (ModelId::ExpSmoothing, Some(p)) = (id, period_value) {
                if name != "period" {
                    params.push(("period", p));
                }
            }
            ModelSpec::with(id, &params).map_err(|e| Error::Advisor(e.to_string()))?;
        }
    }
    Ok(space)
}

/// Candidate pool from a selection payload. With `expected` set the pool
/// must have exactly that many models.
pub fn pool_from_payload(payload: &Value, period: Option<usize>, expected: Option<usize>) -> Result<CandidatePool> {
    let list = payload
        .get("selected_models")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Advisor("selected_models missing".into()))?;
    if let Some(n) = expected {
        if list.len() != n {
            return Err(Error::Advisor(format!("expected {n} models, got {}", list.len())));
        }
    }
    let mut candidates = Vec::with_capacity(list.len());
    for item in list {
        let name = item.get("model").and_then(Value::as_str).unwrap_or_default();
        let model_id: ModelId = name.parse().map_err(|e: Error| Error::Advisor(e.to_string()))?;
        let space = space_from_json(model_id, item.get("hyperparameters").unwrap_or(&Value::Null), period)?;
        candidates.push(Candidate {
            model_id,
            rationale: item.get("reason").and_then(Value::as_str).unwrap_or_default().to_string(),
            space,
        });
    }
    CandidatePool::new(candidates).map_err(|e| Error::Advisor(e.to_string()))
}

fn profile_json(profile: &TemporalProfile) -> String {
    serde_json::to_string_pretty(profile).unwrap_or_default()
}

pub fn advise_models(
    profile: &TemporalProfile,
    n_p: usize,
    backend: &AdvisorBackend,
) -> Result<(CandidatePool, AdvisorDecision)> {
    let pool = crate::planner::select_candidates(profile, n_p)?;
    let rule = AdvisorDecision::rules(DecisionKind::ModelSelection, pool.to_selection_json());
    if backend.mode == AdvisorMode::Rules {
        return Ok((pool, rule));
    }
    let names: Vec<&str> = ModelId::ALL.iter().map(|m| m.as_str()).collect();
    let user = prompts::model_selection(
        &profile_json(profile),
        &serde_json::to_string(&names).unwrap_or_default(),
        n_p,
    );
    let period = profile.seasonality.period;
    Ok(via_llm(backend, prompts::MODEL_SELECTION_SYSTEM, &user, (pool, rule), |v| {
        let pool = pool_from_payload(v, period, Some(n_p))?;
        let payload = pool.to_selection_json();
        Ok((pool, payload))
    }))
}

// Ensemble.

/// Validate an ensemble payload against the member set. Weights must be
/// nonnegative and sum to one within 1e-2; they are renormalized exactly.
/// A weighted average without weights takes the performance weights.
pub fn ensemble_from_payload(
    payload: &Value,
    members: &[String],
    performance_weights: &[f64],
) -> Result<EnsembleDecision> {
    let mut decision: EnsembleDecision =
        serde_json::from_value(payload.clone()).map_err(|e| Error::Advisor(e.to_string()))?;
    let strategy = decision.integration_strategy;
    if strategy == Strategy::SingleBest {
        let name = decision
            .selected_model
            .as_deref()
            .ok_or_else(|| Error::Advisor("best_model without selected_model".into()))?;
        if !members.iter().any(|m| m == name) {
            return Err(Error::Advisor(format!("selected model `{name}` is not a member")));
        }
        decision.weights = None;
        return Ok(decision);
    }
    decision.selected_model = None;
    if !strategy.uses_weights() {
        decision.weights = None;
        return Ok(decision);
    }
    let weights = match decision.weights.take() {
        Some(w) => w,
        None if strategy == Strategy::WeightedAverage && performance_weights.len() == members.len() => members
            .iter()
            .cloned()
            .zip(performance_weights.iter().copied())
            .collect(),
        None => return Err(Error::Advisor(format!("{strategy} needs weights"))),
    };
    let keys: Vec<&String> = weights.keys().collect();
    let mut sorted_members: Vec<&String> = members.iter().collect();
    sorted_members.sort();
    if keys != sorted_members {
        return Err(Error::Advisor(format!(
            "weights name {keys:?} but members are {sorted_members:?}"
        )));
    }
    if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Advisor("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.values().sum();
    if (total - 1.0).abs() > 1e-2 {
        return Err(Error::Advisor(format!("weights sum to {total}, not 1")));
    }
    decision.weights = Some(weights.into_iter().map(|(k, w)| (k, w / total)).collect::<BTreeMap<_, _>>());
    Ok(decision)
}

fn ensemble_context(ranked: &RankedModels, evidence: &DecisionEvidence) -> (String, String) {
    let forecasts: serde_json::Map<String, Value> = ranked
        .top_k
        .iter()
        .map(|r| {
            (
                r.spec.model_id.to_string(),
                json!({
                    "hyperparameters": r.spec.hyperparameters,
                    "val_mae": r.val_mae,
                    "val_mape": r.val_mape,
                    "validation_forecast": r.val_forecast,
                }),
            )
        })
        .collect();
    let viz = format!(
        "Validation evidence: relative scores {:?}, leader gap {:.4}, disagreement index {:.4}, performance weights {:?}.",
        evidence.relative_scores, evidence.gap, evidence.disagreement, evidence.performance_weights
    );
    (
        serde_json::to_string_pretty(&Value::Object(forecasts)).unwrap_or_default(),
        viz,
    )
}

pub fn advise_ensemble(
    ranked: &RankedModels,
    cfg: &EnsembleConfig,
    disagreement: f64,
    backend: &AdvisorBackend,
) -> Result<(EnsembleDecision, DecisionEvidence, AdvisorDecision)> {
    let (decision, evidence) = ensemble::decide(ranked, cfg, disagreement)?;
    let rule = AdvisorDecision::rules(DecisionKind::Ensemble, serde_json::to_value(&decision)?);
    if backend.mode == AdvisorMode::Rules {
        return Ok((decision, evidence, rule));
    }
    let (forecasts, viz) = ensemble_context(ranked, &evidence);
    let user = prompts::ensemble_decision(&forecasts, &viz);
    let members = evidence.members.clone();
    let weights = evidence.performance_weights.clone();
    let (picked, logged) = via_llm(backend, prompts::ENSEMBLE_SYSTEM, &user, (decision, rule), |v| {
        let d = ensemble_from_payload(v, &members, &weights)?;
        let payload = serde_json::to_value(&d)?;
        Ok((d, payload))
    });
    Ok((picked, evidence, logged))
}

/// Ask the chat model and interpret its answer. The logged payload is the
/// normalized decision actually applied; the verbatim answer is kept in
/// `raw_response`. Any failure yields the fallback.
fn via_llm<T>(
    backend: &AdvisorBackend,
    system: &str,
    user: &str,
    fallback: (T, AdvisorDecision),
    interpret: impl Fn(&Value) -> Result<(T, Value)>,
) -> (T, AdvisorDecision) {
    let (rule_value, rule) = fallback;
    let kind = rule.kind;
    let fail = |raw: Option<String>, error: String, exchange: Option<Exchange>, rule: AdvisorDecision| {
        AdvisorDecision {
            source: Source::LlmFallback,
            raw_response: raw,
            error: Some(error),
            exchange,
            ..rule
        }
    };
    let Some(key) = backend.credential() else {
        let msg = format!("no credential in ${}", backend.api_key_env);
        return (rule_value, fail(None, msg, None, rule));
    };
    let exchange = llm::chat(backend, &key, system, user);
    let Some(content) = exchange.content.clone() else {
        let msg = exchange
            .transport_error
            .clone()
            .unwrap_or_else(|| "response has no choices[0].message.content".into());
        let raw = exchange.raw_response.clone();
        return (rule_value, fail(raw, msg, Some(exchange), rule));
    };
    let checked = serde_json::from_str::<Value>(llm::strip_fences(&content))
        .map_err(|e| Error::Advisor(format!("response is not JSON: {e}")))
        .and_then(|v| schema::validate(kind, &v).map(|_| v))
        .and_then(|v| interpret(&v));
    match checked {
        Ok((value, payload)) => (
            value,
            AdvisorDecision {
                kind,
                source: Source::Llm,
                payload,
                raw_response: Some(content),
                error: None,
                exchange: Some(exchange),
            },
        ),
        Err(e) => (rule_value, fail(Some(content), e.to_string(), Some(exchange), rule)),
    }
}

#[cfg(test)]
mod tests;
