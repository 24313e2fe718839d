use super::*;
use crate::preprocess::{diagnose, BasicStats};
use crate::profile::{DistributionInfo, SeasonalityInfo, StationarityTest, TrendInfo, TrendLabel};

fn diag(n: usize, missing: usize, kurtosis: f64) -> QualityDiagnostics {
    QualityDiagnostics {
        len: n,
        stats: BasicStats {
            mean: 0.0,
            std: 1.0,
            min: -3.0,
            max: 3.0,
            skewness: 0.1,
            excess_kurtosis: kurtosis,
            trend: TrendLabel::Stable,
        },
        missing_indices: (0..missing).map(|i| i * 3).collect(),
        outlier_indices: vec![],
        detection: DetectionPolicy::default(),
        repair: RepairPolicy::default(),
        quality_score: 1.0 - missing as f64 / n as f64,
    }
}

fn profile(seasonal: bool, stationary: bool, trend: f64, intermittency: f64) -> TemporalProfile {
    TemporalProfile {
        n: 512,
        trend: TrendInfo {
            label: if trend > 0.0 { TrendLabel::Increasing } else { TrendLabel::Stable },
            strength: trend,
            slope: trend,
        },
        seasonality: SeasonalityInfo {
            detected: seasonal,
            period: seasonal.then_some(24),
            strength: if seasonal { 0.8 } else { 0.0 },
        },
        stationarity: Some(StationarityTest {
            is_stationary: stationary,
            statistic: if stationary { -10.0 } else { -1.0 },
            critical_value: -2.87,
            lags: 7,
        }),
        intermittency,
        distribution: DistributionInfo {
            skewness: 0.0,
            excess_kurtosis: 0.0,
        },
    }
}

#[test]
fn light_tails_with_few_gaps() {
    let d = diag(100, 1, 0.2);
    let (choice, decision) = advise_preprocess(&Series::from_values(&[1.0; 100]).unwrap(), &d, &AdvisorBackend::rules()).unwrap();
    assert_eq!(choice.repair.missing_fill, MissingFill::Interpolate);
    assert_eq!(choice.detection.method, DetectionMethod::RollingIqr);
    assert_eq!(choice.repair.outlier_handle, OutlierHandle::Interpolate);
    assert_eq!(decision.source, Source::Rules);
    schema::validate(DecisionKind::Preprocess, &decision.payload).unwrap();
    assert_eq!(preprocess_from_payload(&decision.payload).unwrap(), (choice.detection, choice.repair));
}

#[test]
fn quarter_missing_is_refused() {
    let d = diag(100, 25, 0.0);
    let err = rules::preprocess_policy(&d).unwrap_err();
    assert!(matches!(err, Error::InsufficientQuality { .. }));
}

#[test]
fn heavy_tails_pick_robust_zscore() {
    let d = diag(100, 10, 5.0);
    let choice = rules::preprocess_policy(&d).unwrap();
    assert_eq!(choice.detection.method, DetectionMethod::RollingZscore);
    assert!(choice.detection.robust_center);
    assert_eq!(choice.repair.outlier_handle, OutlierHandle::LocalMedian);
    assert_eq!(choice.repair.missing_fill, MissingFill::LocalMedian);
}

#[test]
fn wire_names_round_trip() {
    let payload = json!({"recommended_strategies": {
        "missing_value_strategy": "forward_fill",
        "outlier_detect_strategy": "zscore",
        "outlier_handle_strategy": "median"}});
    let (d, r) = preprocess_from_payload(&payload).unwrap();
    assert_eq!(d.method, DetectionMethod::RollingZscore);
    assert!(!d.robust_center);
    assert_eq!(d.alpha, 3.0);
    assert_eq!(r.missing_fill, MissingFill::Ffill);
    assert_eq!(r.outlier_handle, OutlierHandle::LocalMedian);
    let dropped = json!({"recommended_strategies": {
        "missing_value_strategy": "drop",
        "outlier_detect_strategy": "iqr",
        "outlier_handle_strategy": "clip"}});
    assert!(preprocess_from_payload(&dropped).is_err());
}

#[test]
fn seasonal_nonstationary_pool() {
    let (pool, decision) = advise_models(&profile(true, false, 0.0, 0.0), 3, &AdvisorBackend::rules()).unwrap();
    assert_eq!(pool.ids(), vec![ModelId::ExpSmoothing, ModelId::Theta, ModelId::Arima]);
    schema::validate(DecisionKind::ModelSelection, &decision.payload).unwrap();
    let back = pool_from_payload(&decision.payload, Some(24), Some(3)).unwrap();
    assert_eq!(back, pool);
}

#[test]
fn intermittent_pool_starts_with_croston() {
    let (pool, _) = advise_models(&profile(false, true, 0.0, 0.6), 4, &AdvisorBackend::rules()).unwrap();
    assert_eq!(pool.ids()[0], ModelId::Croston);
}

#[test]
fn white_noise_pool_ends_with_baseline() {
    let (pool, _) = advise_models(&profile(false, false, 0.0, 0.0), 5, &AdvisorBackend::rules()).unwrap();
    assert_eq!(pool.ids().len(), 5);
    assert_eq!(*pool.ids().last().unwrap(), ModelId::RandomWalk);
}

#[test]
fn strong_trend_pool() {
    let (pool, _) = advise_models(&profile(false, false, 0.9, 0.0), 2, &AdvisorBackend::rules()).unwrap();
    assert_eq!(pool.ids(), vec![ModelId::LinearRegression, ModelId::ExpSmoothing]);
}

#[test]
fn selection_payload_checks() {
    let ok = json!({"selected_models": [
        {"model": "ARIMA", "hyperparameters": {"p": [0, 1], "d": [1], "q": [0]}, "reason": "r"},
        {"model": "exp_smoothing", "hyperparameters": {"alpha": [0.3], "seasonal": [true]}, "reason": "r"}]});
    let pool = pool_from_payload(&ok, Some(24), Some(2)).unwrap();
    assert_eq!(pool.candidates[1].space.get("period"), Some(&[HyperValue::Int(24)][..]));
    assert!(pool_from_payload(&ok, None, Some(2)).is_err());
    assert!(pool_from_payload(&ok, Some(24), Some(3)).is_err());
    let bad_value = json!({"selected_models": [
        {"model": "arima", "hyperparameters": {"p": [9]}, "reason": "r"}]});
    assert!(pool_from_payload(&bad_value, None, Some(1)).is_err());
    let unknown = json!({"selected_models": [
        {"model": "prophet", "hyperparameters": {}, "reason": "r"}]});
    assert!(pool_from_payload(&unknown, None, Some(1)).is_err());
    let dup = json!({"selected_models": [
        {"model": "theta", "hyperparameters": {}, "reason": "r"},
        {"model": "theta", "hyperparameters": {}, "reason": "r"}]});
    assert!(pool_from_payload(&dup, None, Some(2)).is_err());
}

#[test]
fn ensemble_payload_checks() {
    let members = vec!["arima".to_string(), "theta".to_string()];
    let perf = [0.6, 0.4];
    let custom = json!({"integration_strategy": "custom_weights",
        "weights": {"arima": 0.7, "theta": 0.3005}, "reasoning": "x", "confidence": "high"});
    let d = ensemble_from_payload(&custom, &members, &perf).unwrap();
    let w = d.weights.unwrap();
    assert!((w.values().sum::<f64>() - 1.0).abs() < 1e-15);

    let plain = json!({"integration_strategy": "weighted_average", "reasoning": "x", "confidence": "low"});
    let d = ensemble_from_payload(&plain, &members, &perf).unwrap();
    assert_eq!(d.weights.unwrap()["arima"], 0.6);

    for bad in [
        json!({"integration_strategy": "custom_weights", "weights": {"arima": 1.0}, "reasoning": "", "confidence": ""}),
        json!({"integration_strategy": "custom_weights", "weights": {"arima": 0.9, "theta": 0.5}, "reasoning": "", "confidence": ""}),
        json!({"integration_strategy": "custom_weights", "weights": {"arima": 1.2, "theta": -0.2}, "reasoning": "", "confidence": ""}),
        json!({"integration_strategy": "best_model", "selected_model": "croston", "reasoning": "", "confidence": ""}),
        json!({"integration_strategy": "magic", "reasoning": "", "confidence": ""}),
    ] {
        assert!(ensemble_from_payload(&bad, &members, &perf).is_err(), "{bad}");
    }
}

#[test]
fn rules_mode_is_offline_and_repeatable() {
    let values: Vec<Option<f64>> = (0..200)
        .map(|i| if i % 50 == 7 { None } else { Some((i as f64 * 0.3).sin() * 5.0 + 20.0) })
        .collect();
    let s = Series::from_options(values).unwrap();
    let d = diagnose(&s, &DetectionPolicy::default(), &RepairPolicy::default()).unwrap();
    let a = advise_preprocess(&s, &d, &AdvisorBackend::rules()).unwrap();
    let b = advise_preprocess(&s, &d, &AdvisorBackend::rules()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn llm_without_credential_falls_back() {
    let backend = AdvisorBackend {
        mode: AdvisorMode::Llm,
        api_key_env: "AUTOFORECAST_TEST_UNSET_VARIABLE".into(),
        ..AdvisorBackend::default()
    };
    assert!(backend.validate().is_err());
    let (pool, decision) = advise_models(&profile(true, false, 0.0, 0.0), 3, &backend).unwrap();
    assert_eq!(decision.source, Source::LlmFallback);
    assert_eq!(pool.ids().len(), 3);
}
