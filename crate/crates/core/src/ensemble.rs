//! Ensemble policy: loss aggregation, the leader-gap rule, shrunk
//! inverse-power weights and order-statistic pooling. Every input here comes
//! from the validation segment.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{BacktestRecord, RankedModels};
use crate::series::ZScaler;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub mae: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustMode {
    Median,
    TrimmedMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub delta: f64,
    pub beta: f64,
    pub tau: f64,
    pub lambda: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub metric_weights: MetricWeights,
    /// Validation disagreement above which the robust branch is taken.
    pub disagreement_threshold: f64,
    pub robust_mode: RobustMode,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            beta: 1.0,
            tau: 1.0,
            lambda: 0.1,
            w_min: 0.02,
            w_max: 0.80,
            rho: 0.1,
            epsilon: 1e-8,
            metric_weights: MetricWeights { mae: 0.5, mape: 0.5 },
            disagreement_threshold: 0.25,
            robust_mode: RobustMode::Median,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.delta >= 0.0, "delta must be >= 0"),
            (self.beta > 0.0, "beta must be > 0"),
            (self.tau > 0.0, "tau must be > 0"),
            ((0.0..=1.0).contains(&self.lambda), "lambda must lie in [0, 1]"),
            (
                0.0 < self.w_min && self.w_min <= self.w_max && self.w_max <= 1.0,
                "need 0 < w_min <= w_max <= 1",
            ),
            ((0.0..0.25).contains(&self.rho), "rho must lie in [0, 0.25)"),
            (self.epsilon > 0.0, "epsilon must be > 0"),
            (
                self.metric_weights.mae >= 0.0
                    && self.metric_weights.mape >= 0.0
                    && (self.metric_weights.mae + self.metric_weights.mape - 1.0).abs() < 1e-9,
                "metric weights must be nonnegative and sum to 1",
            ),
            (self.disagreement_threshold >= 0.0, "disagreement threshold must be >= 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config(msg.to_string())),
            None => Ok(()),
        }
    }
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// `s_i = a_mae * minmax(mae)_i + a_mape * minmax(mape)_i`; a metric with a
/// degenerate range contributes 0.
pub fn aggregate_metrics(maes: &[f64], mapes: &[f64], cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    if maes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if maes.len() != mapes.len() {
        return Err(Error::LengthMismatch {
            left: maes.len(),
            right: mapes.len(),
        });
    }
    let a = min_max(maes);
    let b = min_max(mapes);
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| cfg.metric_weights.mae * x + cfg.metric_weights.mape * y)
        .collect())
}

pub fn aggregate_scores(records: &[BacktestRecord], cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    let maes: Vec<f64> = records.iter().map(|r| r.val_mae).collect();
    let mapes: Vec<f64> = records.iter().map(|r| r.val_mape).collect();
    aggregate_metrics(&maes, &mapes, cfg)
}

/// Loss relative to the best model per metric, so the leader scores about 1
/// and relative gaps stay meaningful (min-max always puts the leader at 0).
pub fn relative_scores(records: &[BacktestRecord], cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rel = |get: fn(&BacktestRecord) -> f64| -> Vec<f64> {
        let best = records.iter().map(get).fold(f64::INFINITY, f64::min);
        records
            .iter()
            .map(|r| (get(r) + cfg.epsilon) / (best + cfg.epsilon))
            .collect()
    };
    let a = rel(|r| r.val_mae);
    let b = rel(|r| r.val_mape);
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| cfg.metric_weights.mae * x + cfg.metric_weights.mape * y)
        .collect())
}

/// Relative gap between the two best scores; infinite when a zero-score
/// leader is strictly ahead, zero when both are zero.
pub fn leader_gap(sorted_scores: &[f64]) -> Result<f64> {
    if sorted_scores.len() < 2 {
        return Err(Error::InsufficientLength {
            needed: 2,
            got: sorted_scores.len(),
        });
    }
    let (s1, s2) = (sorted_scores[0], sorted_scores[1]);
    if s1 == 0.0 {
        return Ok(if s2 > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok((s2 - s1) / s1)
}

/// `(s2 - s1) / s1 >= delta` on ascending scores.
pub fn gap_test(sorted_scores: &[f64], delta: f64) -> Result<bool> {
    Ok(leader_gap(sorted_scores)? >= delta)
}

/// Inverse-power weights with temperature, clipped, shrunk toward uniform
/// and renormalised.
pub fn performance_weights(scores: &[f64], cfg: &EnsembleConfig) -> Vec<f64> {
    let k = scores.len() as f64;
    let raw: Vec<f64> = scores
        .iter()
        .map(|s| (s + cfg.epsilon).powf(-cfg.beta).powf(1.0 / cfg.tau))
        .collect();
    let total: f64 = raw.iter().sum();
    let blended: Vec<f64> = raw
        .iter()
        .map(|w| (1.0 - cfg.lambda) * (w / total).clamp(cfg.w_min, cfg.w_max) + cfg.lambda / k)
        .collect();
    let sum: f64 = blended.iter().sum();
    blended.iter().map(|w| w / sum).collect()
}

/// Per-step median or symmetric trimmed mean across members.
pub fn robust_aggregate(members: &[Vec<f64>], mode: RobustMode, rho: f64) -> Result<Vec<f64>> {
    let k = members.len();
    let h = members.first().ok_or(Error::EmptyInput)?.len();
    if let Some(bad) = members.iter().find(|m| m.len() != h) {
        return Err(Error::LengthMismatch {
            left: h,
            right: bad.len(),
        });
    }
    let trimmed = (rho * k as f64).floor() as usize;
    if mode == RobustMode::TrimmedMean && 2 * trimmed >= k {
        return Err(Error::TrimTooLarge { trimmed, k });
    }
    Ok((0..h)
        .map(|t| {
            let column: Vec<f64> = members.iter().map(|m| m[t]).collect();
            match mode {
                RobustMode::Median => stats::median(&column),
                RobustMode::TrimmedMean => stats::mean(&stats::sorted(&column)[trimmed..k - trimmed]),
            }
        })
        .collect())
}

/// Mean over steps of the member range, relative to the interquartile range
/// of the validation targets.
pub fn disagreement(member_forecasts: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    if member_forecasts.len() < 2 {
        return Ok(0.0);
    }
    let h = targets.len();
    if h == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = member_forecasts.iter().find(|m| m.len() != h) {
        return Err(Error::LengthMismatch {
            left: h,
            right: bad.len(),
        });
    }
    let spread: f64 = (0..h)
        .map(|t| {
            let col = member_forecasts.iter().map(|m| m[t]);
            let hi = col.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = col.fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .sum::<f64>()
        / h as f64;
    let ordered = stats::sorted(targets);
    let iqr = stats::quantile_sorted(&ordered, 0.75) - stats::quantile_sorted(&ordered, 0.25);
    if iqr <= 1e-12 {
        return Ok(if spread > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(spread / iqr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[serde(rename = "best_model")]
    SingleBest,
    WeightedAverage,
    Median,
    TrimmedMean,
    CustomWeights,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SingleBest => "best_model",
            Strategy::WeightedAverage => "weighted_average",
            Strategy::Median => "median",
            Strategy::TrimmedMean => "trimmed_mean",
            Strategy::CustomWeights => "custom_weights",
        }
    }

    pub fn uses_weights(self) -> bool {
        matches!(self, Strategy::WeightedAverage | Strategy::CustomWeights)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wire-compatible ensemble decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDecision {
    pub integration_strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_model: Option<String>,
    pub reasoning: String,
    pub confidence: String,
}

/// Numbers behind a decision, kept for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEvidence {
    pub members: Vec<String>,
    pub relative_scores: Vec<f64>,
    pub weight_scores: Vec<f64>,
    #[serde(with = "crate::planner::finite_or_null")]
    pub gap: f64,
    #[serde(with = "crate::planner::finite_or_null")]
    pub disagreement: f64,
    pub performance_weights: Vec<f64>,
}

fn confidence_label(gap: f64, delta: f64) -> &'static str {
    if gap >= 4.0 * delta {
        "high"
    } else if gap >= delta {
        "medium"
    } else {
        "low"
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

/// Branch rule over precomputed scores: single best when the leader's
/// relative gap reaches `delta`, robust pooling when members disagree,
/// otherwise shrunk performance weights.
pub fn decide_from_scores(
    members: &[String],
    gap_scores: &[f64],
    weight_scores: &[f64],
    cfg: &EnsembleConfig,
    disagreement: f64,
) -> Result<(EnsembleDecision, DecisionEvidence)> {
    cfg.validate()?;
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    if gap_scores.len() != members.len() || weight_scores.len() != members.len() {
        return Err(Error::MemberMismatch {
            weights: gap_scores.len().min(weight_scores.len()),
            members: members.len(),
        });
    }
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| gap_scores[a].total_cmp(&gap_scores[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| gap_scores[i]).collect();
    let leader = &members[order[0]];
    let gap = if members.len() == 1 { f64::INFINITY } else { leader_gap(&sorted)? };
    let weights = performance_weights(weight_scores, cfg);
    let evidence = DecisionEvidence {
        members: members.to_vec(),
        relative_scores: gap_scores.to_vec(),
        weight_scores: weight_scores.to_vec(),
        gap,
        disagreement,
        performance_weights: weights.clone(),
    };
    let confidence = confidence_label(gap, cfg.delta).to_string();

    let decision = if gap >= cfg.delta {
        EnsembleDecision {
            integration_strategy: Strategy::SingleBest,
            weights: None,
            selected_model: Some(leader.clone()),
            reasoning: format!(
                "{leader} leads the validation score by a relative gap of {} (threshold {}), so it is used alone.",
                fmt_num(gap),
                fmt_num(cfg.delta)
            ),
            confidence,
        }
    } else if disagreement > cfg.disagreement_threshold {
        let strategy = match cfg.robust_mode {
            RobustMode::Median => Strategy::Median,
            RobustMode::TrimmedMean => Strategy::TrimmedMean,
        };
        EnsembleDecision {
            integration_strategy: strategy,
            weights: None,
            selected_model: None,
            reasoning: format!(
                "No clear leader (gap {} < {}) and validation forecasts disagree (index {} > {}); pooling by {strategy}.",
                fmt_num(gap),
                fmt_num(cfg.delta),
                fmt_num(disagreement),
                fmt_num(cfg.disagreement_threshold)
            ),
            confidence,
        }
    } else {
        EnsembleDecision {
            integration_strategy: Strategy::WeightedAverage,
            weights: Some(members.iter().cloned().zip(weights.iter().copied()).collect()),
            selected_model: None,
            reasoning: format!(
                "No clear leader (gap {} < {}) and members agree (disagreement {} <= {}); weights follow validation performance with shrinkage {}.",
                fmt_num(gap),
                fmt_num(cfg.delta),
                fmt_num(disagreement),
                fmt_num(cfg.disagreement_threshold),
                fmt_num(cfg.lambda)
            ),
            confidence,
        }
    };
    Ok((decision, evidence))
}

/// Decide on the ranked validation records.
pub fn decide(
    ranked: &RankedModels,
    cfg: &EnsembleConfig,
    disagreement: f64,
) -> Result<(EnsembleDecision, DecisionEvidence)> {
    if ranked.top_k.is_empty() {
        return Err(Error::EmptyInput);
    }
    let members: Vec<String> = ranked.ids().iter().map(|m| m.to_string()).collect();
    decide_from_scores(
        &members,
        &relative_scores(&ranked.top_k, cfg)?,
        &aggregate_scores(&ranked.top_k, cfg)?,
        cfg,
        disagreement,
    )
}

/// Apply a decision to member forecasts (ordered as `members`). Weighted
/// combinations and pooling happen in scaled space when a scaler is given.
pub fn combine(
    decision: &EnsembleDecision,
    members: &[String],
    forecasts: &[Vec<f64>],
    scaler: Option<&ZScaler>,
    rho: f64,
) -> Result<Vec<f64>> {
    if members.len() != forecasts.len() || members.is_empty() {
        return Err(Error::MemberMismatch {
            weights: forecasts.len(),
            members: members.len(),
        });
    }
    let h = forecasts[0].len();
    if let Some(bad) = forecasts.iter().find(|f| f.len() != h) {
        return Err(Error::LengthMismatch {
            left: h,
            right: bad.len(),
        });
    }
    if decision.integration_strategy == Strategy::SingleBest {
        let name = decision
            .selected_model
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("best_model without selected_model".into()))?;
        let at = members
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::InvalidParameter(format!("{name} is not a member")))?;
        return Ok(forecasts[at].clone());
    }
    let scaled: Vec<Vec<f64>> = match scaler {
        Some(s) => forecasts.iter().map(|f| s.transform(f)).collect(),
        None => forecasts.to_vec(),
    };
    let pooled = match decision.integration_strategy {
        Strategy::Median => robust_aggregate(&scaled, RobustMode::Median, rho)?,
        Strategy::TrimmedMean => robust_aggregate(&scaled, RobustMode::TrimmedMean, rho)?,
        _ => {
            let weights = decision
                .weights
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("weighted strategy without weights".into()))?;
            if weights.len() != members.len() || members.iter().any(|m| !weights.contains_key(m)) {
                return Err(Error::MemberMismatch {
                    weights: weights.len(),
                    members: members.len(),
                });
            }
            (0..h)
                .map(|t| {
                    members
                        .iter()
                        .zip(&scaled)
                        .map(|(m, f)| weights[m] * f[t])
                        .sum()
                })
                .collect()
        }
    };
    Ok(match scaler {
        Some(s) => s.inverse(&pooled),
        None => pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("m{i}")).collect()
    }

    #[test]
    fn score_examples() {
        let cfg = EnsembleConfig::default();
        assert_eq!(aggregate_metrics(&[2.0], &[5.0], &cfg).unwrap(), vec![0.0]);
        assert_eq!(aggregate_metrics(&[1.0, 3.0], &[10.0, 20.0], &cfg).unwrap(), vec![0.0, 1.0]);
        assert_eq!(aggregate_metrics(&[2.0, 2.0], &[4.0, 4.0], &cfg).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn gap_examples() {
        assert!(!gap_test(&[1.00, 1.04], 0.05).unwrap());
        assert!(gap_test(&[1.00, 1.10], 0.05).unwrap());
        assert!(gap_test(&[1.00, 1.05], 0.05).unwrap());
        assert!(gap_test(&[0.0, 0.5], 0.05).unwrap());
        assert!(!gap_test(&[0.0, 0.0], 0.05).unwrap());
        assert!(gap_test(&[1.0], 0.05).is_err());
    }

    #[test]
    fn weight_examples() {
        let cfg = EnsembleConfig::default();
        let w = performance_weights(&[1.0, 1.0], &cfg);
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);

        let exact = EnsembleConfig {
            epsilon: 1e-300,
            ..cfg
        };
        let w = performance_weights(&[1.0, 3.0], &exact);
        assert!((w[0] - 0.725).abs() < 1e-9 && (w[1] - 0.275).abs() < 1e-9, "{w:?}");

        let w = performance_weights(&[0.0, 10.0, 10.0], &cfg);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Leader clipped to w_max, others to w_min, shrunk, then renormalised.
        let top = 0.9 * 0.80 + 0.1 / 3.0;
        let rest = 0.9 * 0.02 + 0.1 / 3.0;
        assert!((w[0] - top / (top + 2.0 * rest)).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn pooling_examples() {
        let m = vec![vec![1.0], vec![2.0], vec![100.0]];
        assert_eq!(robust_aggregate(&m, RobustMode::Median, 0.1).unwrap(), vec![2.0]);
        let five: Vec<Vec<f64>> = (1..=5).map(|v| vec![v as f64]).collect();
        assert_eq!(robust_aggregate(&five, RobustMode::TrimmedMean, 0.1).unwrap(), vec![3.0]);
        let ten: Vec<Vec<f64>> = (1..=10).map(|v| vec![v as f64]).collect();
        assert_eq!(robust_aggregate(&ten, RobustMode::TrimmedMean, 0.1).unwrap(), vec![5.5]);
        let two = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            robust_aggregate(&two, RobustMode::TrimmedMean, 0.5),
            Err(Error::TrimTooLarge { .. })
        ));
    }

    #[test]
    fn decide_examples() {
        let cfg = EnsembleConfig::default();
        let (d, _) = decide_from_scores(&names(3), &[1.0, 1.2, 1.3], &[0.0, 0.67, 1.0], &cfg, 0.0).unwrap();
        assert_eq!(d.integration_strategy, Strategy::SingleBest);
        assert_eq!(d.selected_model.as_deref(), Some("m0"));
        assert!(d.reasoning.contains("0.2000"));

        let (d, _) = decide_from_scores(&names(3), &[1.0, 1.02, 1.03], &[0.0, 0.67, 1.0], &cfg, 0.1).unwrap();
        assert_eq!(d.integration_strategy, Strategy::WeightedAverage);
        let w = d.weights.unwrap();
        assert!((w.values().sum::<f64>() - 1.0).abs() < 1e-9);

        let (d, _) = decide_from_scores(&names(2), &[1.0, 1.02], &[0.0, 1.0], &cfg, 0.6).unwrap();
        assert_eq!(d.integration_strategy, Strategy::Median);
    }

    #[test]
    fn wire_shape() {
        let (d, _) = decide_from_scores(&names(2), &[1.0, 1.5], &[0.0, 1.0], &EnsembleConfig::default(), 0.0).unwrap();
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["integration_strategy"], "best_model");
        assert_eq!(v["selected_model"], "m0");
        assert!(v.get("reasoning").is_some() && v.get("confidence").is_some());
        let back: EnsembleDecision = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn combine_examples() {
        let members = names(2);
        let weighted = |a: f64, b: f64| EnsembleDecision {
            integration_strategy: Strategy::WeightedAverage,
            weights: Some([("m0".to_string(), a), ("m1".to_string(), b)].into_iter().collect()),
            selected_model: None,
            reasoning: String::new(),
            confidence: "low".into(),
        };
        let fa = vec![1.5, -2.25, 7.0];
        let fb = vec![9.0, 9.0, 9.0];
        let out = combine(&weighted(1.0, 0.0), &members, &[fa.clone(), fb.clone()], None, 0.1).unwrap();
        assert_eq!(out, fa);
        let out = combine(&weighted(0.5, 0.5), &members, &[vec![2.0; 4], vec![4.0; 4]], None, 0.1).unwrap();
        assert_eq!(out, vec![3.0; 4]);

        let scaler = ZScaler::fit(&[3.0, 8.0, 1.0, 12.0, 5.0]).unwrap();
        let d = weighted(0.3, 0.7);
        let scaled = combine(&d, &members, &[fa.clone(), fb.clone()], Some(&scaler), 0.1).unwrap();
        let plain = combine(&d, &members, &[fa, fb], None, 0.1).unwrap();
        for (a, b) in scaled.iter().zip(&plain) {
            assert!((a - b).abs() < 1e-9);
        }
        let wrong = vec!["m0".to_string(), "zz".to_string()];
        assert!(combine(&d, &wrong, &[vec![1.0], vec![2.0]], None, 0.1).is_err());
    }

    #[test]
    fn disagreement_index() {
        let targets = [1.0, 2.0, 3.0, 4.0, 5.0];
        let d = disagreement(&[vec![1.0; 5], vec![2.0; 5]], &targets).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert_eq!(disagreement(&[vec![1.0; 5]], &targets).unwrap(), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::default().validate().is_ok());
        let bad = EnsembleConfig {
            rho: 0.3,
            ..EnsembleConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn weights_are_a_distribution(
            scores in prop::collection::vec(0.0f64..5.0, 1..8),
            beta in 0.2f64..3.0,
            tau in 0.2f64..3.0,
        ) {
            let cfg = EnsembleConfig { beta, tau, ..EnsembleConfig::default() };
            let w = performance_weights(&scores, &cfg);
            let k = scores.len() as f64;
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let floor = ((1.0 - cfg.lambda) * cfg.w_min + cfg.lambda / k).min(cfg.lambda / k);
            prop_assert!(w.iter().all(|v| *v >= floor - 1e-12 && *v <= 1.0));
            for i in 0..scores.len() {
                for j in 0..scores.len() {
                    if scores[i] < scores[j] {
                        prop_assert!(w[i] >= w[j] - 1e-12);
                    }
                }
            }
        }

        #[test]
        fn median_resists_minority_corruption(
            base in prop::collection::vec(-10.0f64..10.0, 3..9),
            junk in prop::collection::vec(-1e9f64..1e9, 4),
        ) {
            let k = base.len();
            let members: Vec<Vec<f64>> = base.iter().map(|v| vec![*v]).collect();
            let clean = robust_aggregate(&members, RobustMode::Median, 0.1).unwrap()[0];
            let mut bad = members.clone();
            for (i, j) in junk.iter().enumerate().take((k - 1) / 2) {
                bad[i][0] = *j;
            }
            let out = robust_aggregate(&bad, RobustMode::Median, 0.1).unwrap()[0];
            let lo = base.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out >= lo && out <= hi);
            prop_assert!(clean >= lo && clean <= hi);
        }
    }
}
