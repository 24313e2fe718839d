//! Deterministic rule tables standing in for the agent decisions.

use crate::error::{Error, Result};
use crate::models::ModelId;
use crate::preprocess::{DetectionPolicy, MissingFill, OutlierHandle, QualityDiagnostics, RepairPolicy};
use crate::profile::{TemporalProfile, TrendLabel};

/// Above this share of missing points the series is rejected.
pub const MAX_MISSING_FRACTION: f64 = 0.20;
/// Below this share gaps are interpolated; above it a local median is used.
pub const INTERPOLATE_MISSING_FRACTION: f64 = 0.05;
pub const HEAVY_TAIL_KURTOSIS: f64 = 3.0;
pub const HEAVY_TAIL_SKEW: f64 = 1.0;
pub const STRONG_TREND: f64 = 0.6;
pub const INTERMITTENT: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessChoice {
    pub detection: DetectionPolicy,
    pub repair: RepairPolicy,
    pub rationale: String,
}

pub fn preprocess_policy(diag: &QualityDiagnostics) -> Result<PreprocessChoice> {
    let missing = diag.missing_fraction();
    if missing > MAX_MISSING_FRACTION {
        return Err(Error::InsufficientQuality {
            missing_pct: 100.0 * missing,
        });
    }
    let (missing_fill, fill_reason) = if missing < INTERPOLATE_MISSING_FRACTION {
        (MissingFill::Interpolate, format!("{:.1}% missing: gaps are short, interpolate", 100.0 * missing))
    } else {
        (
            MissingFill::LocalMedian,
            format!("{:.1}% missing: fill from a local median to avoid long straight runs", 100.0 * missing),
        )
    };
    let heavy = diag.stats.excess_kurtosis > HEAVY_TAIL_KURTOSIS || diag.stats.skewness.abs() > HEAVY_TAIL_SKEW;
    let (detection, outlier_handle, outlier_reason) = if heavy {
        (
            DetectionPolicy::robust_zscore(24, 3.5),
            OutlierHandle::LocalMedian,
            format!(
                "heavy tails (skew {:.2}, excess kurtosis {:.2}): robust z-score with local median replacement",
                diag.stats.skewness, diag.stats.excess_kurtosis
            ),
        )
    } else {
        (
            DetectionPolicy::default(),
            OutlierHandle::Interpolate,
            "light tails: rolling IQR fences with interpolation".to_string(),
        )
    };
    Ok(PreprocessChoice {
        detection,
        repair: RepairPolicy {
            outlier_handle,
            missing_fill,
            ..RepairPolicy::default()
        },
        rationale: format!("{fill_reason}; {outlier_reason}"),
    })
}

/// Fallback fill order once the triggered rules are exhausted.
const PRIORITY: [ModelId; 9] = [
    ModelId::LinearRegression,
    ModelId::ExpSmoothing,
    ModelId::Theta,
    ModelId::Arima,
    ModelId::MovingAverage,
    ModelId::RidgeRegression,
    ModelId::PolynomialRegression,
    ModelId::LassoRegression,
    ModelId::Croston,
];

/// Priority-ordered, de-duplicated pool of `n_p` models with a reason each.
pub fn candidate_models(profile: &TemporalProfile, n_p: usize) -> Result<Vec<(ModelId, String)>> {
    if n_p == 0 || n_p > ModelId::ALL.len() {
        return Err(Error::InvalidParameter(format!(
            "pool size must be in 1..={}, got {n_p}",
            ModelId::ALL.len()
        )));
    }
    let mut picks: Vec<(ModelId, String)> = Vec::new();
    let push = |id: ModelId, why: String, picks: &mut Vec<(ModelId, String)>| {
        if !picks.iter().any(|(p, _)| *p == id) {
            picks.push((id, why));
        }
    };

    if profile.intermittency > INTERMITTENT {
        push(
            ModelId::Croston,
            format!("{:.0}% zeros: intermittent demand", 100.0 * profile.intermittency),
            &mut picks,
        );
    }
    if let (true, Some(p)) = (profile.seasonality.detected, profile.seasonality.period) {
        let why = format!("seasonal period {p} (strength {:.2})", profile.seasonality.strength);
        push(ModelId::ExpSmoothing, format!("{why}: Holt-Winters seasonal smoothing"), &mut picks);
        push(ModelId::Theta, format!("{why}: theta decomposition of level and trend"), &mut picks);
        push(ModelId::Arima, format!("{why}: ARIMA absorbs residual autocorrelation"), &mut picks);
    }
    if profile.trend.label != TrendLabel::Stable && profile.trend.strength >= STRONG_TREND {
        let why = format!("{} trend (strength {:.2})", profile.trend.label, profile.trend.strength);
        push(ModelId::LinearRegression, format!("{why}: lag regression extrapolates drift"), &mut picks);
        push(ModelId::ExpSmoothing, format!("{why}: Holt trend smoothing"), &mut picks);
    }
    if profile.is_stationary() && !profile.seasonality.detected {
        push(ModelId::Arima, "stationary without seasonality: ARMA structure".into(), &mut picks);
        push(ModelId::MovingAverage, "stationary without seasonality: local level".into(), &mut picks);
    }

    let baseline = n_p > 3;
    let room = if baseline { n_p - 1 } else { n_p };
    picks.truncate(room);
    for id in PRIORITY {
        if picks.len() >= room {
            break;
        }
        push(id, format!("fills the pool by priority order ({id})"), &mut picks);
    }
    if baseline {
        push(ModelId::RandomWalk, "naive baseline".into(), &mut picks);
        for id in PRIORITY {
            if picks.len() >= n_p {
                break;
            }
            push(id, format!("fills the pool by priority order ({id})"), &mut picks);
        }
    }
    picks.truncate(n_p);
    Ok(picks)
}
