//! Candidate selection, seeded hyperparameter sampling, validation backtests
//! and top-k ranking.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::advisor::rules;
use crate::error::{Error, Result};
use crate::models::{
    fit_forecast, hyperparameter_space_for, HyperparameterSpace, Hyperparameters, ModelId, ModelSpec,
};
use crate::par::{self, Parallelism};
use crate::profile::TemporalProfile;
use crate::series::{mae, mape, Series, ZScaler};

pub const DEFAULT_POOL_SIZE: usize = 5;
pub const DEFAULT_CONFIGS_PER_MODEL: usize = 10;
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub model_id: ModelId,
    pub rationale: String,
    /// Search space; defaults to the registry grid specialised to the profile.
    pub space: HyperparameterSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub candidates: Vec<Candidate>,
}

impl CandidatePool {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidParameter("candidate pool is empty".into()));
        }
        for (i, c) in candidates.iter().enumerate() {
            if candidates[..i].iter().any(|o| o.model_id == c.model_id) {
                return Err(Error::InvalidParameter(format!("{} appears twice", c.model_id)));
            }
            if c.rationale.trim().is_empty() {
                return Err(Error::InvalidParameter(format!("{} has no rationale", c.model_id)));
            }
            if c.space.params.iter().any(|(_, v)| v.is_empty()) {
                return Err(Error::InvalidParameter(format!("{} has an empty search list", c.model_id)));
            }
        }
        Ok(Self { candidates })
    }

    pub fn ids(&self) -> Vec<ModelId> {
        self.candidates.iter().map(|c| c.model_id).collect()
    }

    /// Selection record in the shape `{"selected_models":[{"model","hyperparameters","reason"}]}`.
    pub fn to_selection_json(&self) -> serde_json::Value {
        let models: Vec<serde_json::Value> = self
            .candidates
            .iter()
            .map(|c| {
                let space: serde_json::Map<String, serde_json::Value> = c
                    .space
                    .params
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                    .collect();
                serde_json::json!({
                    "model": c.model_id.as_str(),
                    "hyperparameters": space,
                    "reason": c.rationale,
                })
            })
            .collect();
        serde_json::json!({ "selected_models": models })
    }
}

/// Rule-table candidate pool of exactly `n_p` distinct models.
pub fn select_candidates(profile: &TemporalProfile, n_p: usize) -> Result<CandidatePool> {
    let picks = rules::candidate_models(profile, n_p)?;
    let period = profile.seasonality.period;
    CandidatePool::new(
        picks
            .into_iter()
            .map(|(model_id, rationale)| Candidate {
                model_id,
                rationale,
                space: hyperparameter_space_for(model_id, period),
            })
            .collect(),
    )
}

/// `min(n, |grid|)` distinct configurations. Small grids are enumerated in
/// full; larger ones are sampled without replacement and returned in
/// enumeration order.
pub fn sample_configs(space: &HyperparameterSpace, n: usize, seed: u64) -> Result<Vec<Hyperparameters>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if space.params.is_empty() || space.params.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::InvalidParameter("empty hyperparameter space".into()));
    }
    let size = space.size();
    if size <= n {
        return Ok(space.enumerate());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, size, n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| space.config_at(i)).collect())
}

/// Per-model stream derived from the run seed, independent of pool order.
pub fn model_seed(seed: u64, id: ModelId) -> u64 {
    let tag = id.as_str().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    });
    let mut z = seed ^ tag;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed,
}

/// Non-finite values as JSON null, read back as +inf.
pub(crate) mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRecord {
    pub spec: ModelSpec,
    #[serde(with = "finite_or_null")]
    pub val_mape: f64,
    #[serde(with = "finite_or_null")]
    pub val_mae: f64,
    pub status: RecordStatus,
    pub configs_evaluated: usize,
    /// Validation forecast of the selected configuration, in original units.
    #[serde(default)]
    pub val_forecast: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl BacktestRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

/// Fit on `train` and forecast `horizon` steps. Models work in z-scored
/// units except Croston, whose zero/nonzero logic needs the raw values.
pub fn forecast_scaled(spec: &ModelSpec, train: &Series, scaler: &ZScaler, horizon: usize) -> Result<Vec<f64>> {
    if spec.model_id == ModelId::Croston {
        return Ok(fit_forecast(spec, train, horizon)?.values);
    }
    let scaled = train.with_dense(&scaler.transform(&train.dense()?))?;
    let out = fit_forecast(spec, &scaled, horizon)?;
    Ok(scaler.inverse(&out.values))
}

struct Trial {
    model: usize,
    config: usize,
    spec: ModelSpec,
}

struct Scored {
    mape: f64,
    mae: f64,
    forecast: Vec<f64>,
}

/// Evaluate sampled configurations of every candidate on the validation
/// segment and keep the best one per model (MAPE, then MAE, then
/// enumeration order).
pub fn backtest(
    pool: &CandidatePool,
    train: &Series,
    val: &Series,
    n: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<Vec<BacktestRecord>> {
    let target = val.dense()?;
    if target.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scaler = ZScaler::fit(&train.dense()?)?;

    let mut trials = Vec::new();
    let mut invalid: Vec<Vec<String>> = vec![Vec::new(); pool.candidates.len()];
    for (m, cand) in pool.candidates.iter().enumerate() {
        for (c, cfg) in sample_configs(&cand.space, n, model_seed(seed, cand.model_id))?
            .into_iter()
            .enumerate()
        {
            match ModelSpec::new(cand.model_id, cfg) {
                Ok(spec) => trials.push(Trial { model: m, config: c, spec }),
                Err(e) => invalid[m].push(e.to_string()),
            }
        }
    }

    let results: Vec<Result<Scored>> = par::map(parallelism, &trials, |t| {
        let forecast = forecast_scaled(&t.spec, train, &scaler, target.len())?;
        Ok(Scored {
            mape: mape(&target, &forecast)?,
            mae: mae(&target, &forecast)?,
            forecast,
        })
    });

    let mut records = Vec::with_capacity(pool.candidates.len());
    for (m, cand) in pool.candidates.iter().enumerate() {
        let mut best: Option<(&Trial, &Scored)> = None;
        let mut last_error = invalid[m].last().cloned();
        let mut evaluated = 0;
        for (t, r) in trials.iter().zip(&results).filter(|(t, _)| t.model == m) {
            evaluated += 1;
            match r {
                Ok(s) => {
                    let better = best.is_none_or(|(bt, b)| {
                        (s.mape, s.mae, t.config) < (b.mape, b.mae, bt.config)
                    });
                    if better {
                        best = Some((t, s));
                    }
                }
                Err(e) => last_error = Some(e.to_string()),
            }
        }
        records.push(match best {
            Some((t, s)) => BacktestRecord {
                spec: t.spec.clone(),
                val_mape: s.mape,
                val_mae: s.mae,
                status: RecordStatus::Ok,
                configs_evaluated: evaluated,
                val_forecast: s.forecast.clone(),
                failure: None,
            },
            None => BacktestRecord {
                spec: ModelSpec {
                    model_id: cand.model_id,
                    hyperparameters: Hyperparameters::new(),
                },
                val_mape: f64::INFINITY,
                val_mae: f64::INFINITY,
                status: RecordStatus::Failed,
                configs_evaluated: evaluated,
                val_forecast: Vec::new(),
                failure: last_error.or_else(|| Some("no configuration evaluated".into())),
            },
        });
    }
    if records.iter().all(|r| !r.is_ok()) {
        return Err(Error::NoSuccessfulModels);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModels {
    pub top_k: Vec<BacktestRecord>,
}

impl RankedModels {
    pub fn ids(&self) -> Vec<ModelId> {
        self.top_k.iter().map(|r| r.spec.model_id).collect()
    }
}

/// Successful records by ascending validation MAPE (then MAE, then id),
/// truncated to `k`.
pub fn rank_top_k(records: &[BacktestRecord], k: usize) -> Result<RankedModels> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut ok: Vec<BacktestRecord> = records.iter().filter(|r| r.is_ok()).cloned().collect();
    if ok.is_empty() {
        return Err(Error::NoSuccessfulModels);
    }
    ok.sort_by(|a, b| {
        a.val_mape
            .total_cmp(&b.val_mape)
            .then(a.val_mae.total_cmp(&b.val_mae))
            .then_with(|| a.spec.model_id.as_str().cmp(b.spec.model_id.as_str()))
    });
    ok.truncate(k);
    Ok(RankedModels { top_k: ok })
}
