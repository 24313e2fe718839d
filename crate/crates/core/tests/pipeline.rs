mod common;

use std::collections::HashMap;
use std::time::Instant;

use proptest::prelude::*;

use autoforecast::ensemble::{combine, EnsembleDecision, Strategy};
use autoforecast::par::Parallelism;
use autoforecast::pipeline::{self, make_slices, run_on_series, run_slice, RunConfig, SliceSettings};
use autoforecast::reporter::WorkflowLog;
use autoforecast::series::ZScaler;
use autoforecast::synthetic::{self, SyntheticSpec};
use autoforecast::Series;

fn small(out: std::path::PathBuf) -> RunConfig {
    RunConfig {
        slices: 4,
        input_length: 256,
        horizons: vec![48, 96],
        out,
        ..RunConfig::default()
    }
}

fn bundled() -> Series {
    Series::from_options(synthetic::bundled()).unwrap()
}

fn read(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let series = bundled();
    let mut runs = Vec::new();
    for threads in [1, 4] {
        let cfg = RunConfig {
            threads,
            ..small(common::temp_dir(&format!("threads-{threads}")))
        };
        run_on_series(&series, &cfg).unwrap();
        runs.push(cfg.out);
    }
    for file in ["aggregate.csv", "slices.csv", "h48/slice_00/report.md", "h96/slice_03/metrics.csv"] {
        assert_eq!(read(&runs[0].join(file)), read(&runs[1].join(file)), "{file}");
    }
}

#[test]
fn slice_counts_and_aggregates() {
    let cfg = RunConfig {
        slices: 2,
        horizons: vec![96],
        ..small(common::temp_dir("count"))
    };
    let summary = run_on_series(&bundled(), &cfg).unwrap();
    assert_eq!(summary.results.len(), 2);

    let cfg = small(common::temp_dir("agg"));
    let summary = run_on_series(&bundled(), &cfg).unwrap();
    let mut rdr = csv::Reader::from_path(cfg.out.join("slices.csv")).unwrap();
    let rows: Vec<HashMap<String, String>> = rdr.deserialize().map(Result::unwrap).collect();
    let mut means = Vec::new();
    for h in [48, 96] {
        let maes: Vec<f64> = rows
            .iter()
            .filter(|r| r["horizon"] == h.to_string())
            .map(|r| r["test_mae"].parse().unwrap())
            .collect();
        let mean = maes.iter().sum::<f64>() / maes.len() as f64;
        let row = summary.aggregate.iter().find(|a| a.horizon == h.to_string()).unwrap();
        assert!((row.mae - mean).abs() < 1e-12);
        means.push(mean);
    }
    let avg = summary.aggregate.last().unwrap();
    assert_eq!(avg.horizon, "avg");
    assert!((avg.mae - (means[0] + means[1]) / 2.0).abs() < 1e-12);
}

#[test]
fn failing_slices_are_isolated() {
    let mut values = synthetic::bundled();
    for v in &mut values[2000..2300] {
        *v = None;
    }
    let series = Series::from_options(values).unwrap();
    let cfg = RunConfig {
        slices: 5,
        horizons: vec![96],
        ..small(common::temp_dir("isolation"))
    };
    let summary = run_on_series(&series, &cfg).unwrap();
    let failed: Vec<_> = summary.results.iter().filter(|r| r.error.is_some()).collect();
    assert!(!failed.is_empty() && failed.len() < 5);
    assert_eq!(summary.aggregate[0].slices_failed, failed.len());
    assert_eq!(summary.aggregate[0].slices_ok, 5 - failed.len());
    for r in failed {
        assert!(pipeline::slice_dir(&cfg.out, 96, r.slice).join("error.txt").exists());
    }
}

#[test]
fn rerunning_a_slice_overwrites_identically() {
    let cfg = RunConfig {
        slices: 1,
        horizons: vec![48],
        ..small(common::temp_dir("rerun"))
    };
    run_on_series(&bundled(), &cfg).unwrap();
    let dir = pipeline::slice_dir(&cfg.out, 48, 0);
    let first = (read(&dir.join("report.md")), read(&dir.join("metrics.csv")), read(&dir.join("plots/ensemble_forecast.svg")));
    let log_a = WorkflowLog::read(&dir.join("log.ndjson")).unwrap();
    run_on_series(&bundled(), &cfg).unwrap();
    let second = (read(&dir.join("report.md")), read(&dir.join("metrics.csv")), read(&dir.join("plots/ensemble_forecast.svg")));
    assert_eq!(first, second);
    let log_b = WorkflowLog::read(&dir.join("log.ndjson")).unwrap();
    let strip = |l: &WorkflowLog| l.events().iter().map(|e| (e.seq, e.stage.clone(), e.payload.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&log_a), strip(&log_b));
}

#[test]
fn replay_rejects_a_tampered_log() {
    let cfg = RunConfig {
        slices: 1,
        horizons: vec![48],
        ..small(common::temp_dir("tamper"))
    };
    run_on_series(&bundled(), &cfg).unwrap();
    let dir = pipeline::slice_dir(&cfg.out, 48, 0);
    assert!(pipeline::rerender(&dir).is_ok());
    let text = read(&dir.join("log.ndjson"));
    let tampered: String = text
        .lines()
        .map(|line| {
            let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
            if v["stage"] == "backtest" {
                v["payload"]["records"][0]["val_mape"] = serde_json::json!(0.001);
            }
            format!("{v}\n")
        })
        .collect();
    std::fs::write(dir.join("log.ndjson"), tampered).unwrap();
    let err = pipeline::rerender(&dir).unwrap_err().to_string();
    assert!(err.contains("backtest"), "{err}");
}

#[test]
fn intervals_cover_most_test_points() {
    let (t, h) = (192, 24);
    let settings = SliceSettings {
        parallelism: Parallelism::Sequential,
        ..SliceSettings::from_config(&RunConfig::default(), h)
    };
    let (mut inside, mut total) = (0usize, 0usize);
    for trial in 0..200u64 {
        let spec = SyntheticSpec {
            n: t + h,
            seed: 70_000 + trial,
            spike_prob: 0.0,
            missing_prob: 0.0,
            ..SyntheticSpec::default()
        };
        let v = synthetic::generate(&spec);
        let input = Series::from_options(v[..t].to_vec()).unwrap();
        let (a, _) = run_slice(0, &input, || v[t..].to_vec(), &settings).unwrap();
        for (i, y) in v[t..].iter().enumerate() {
            let y = y.unwrap();
            total += 1;
            if a.intervals.lower[i] <= y && y <= a.intervals.upper[i] {
                inside += 1;
            }
        }
    }
    let coverage = inside as f64 / total as f64;
    eprintln!("pooled coverage {coverage:.3}");
    assert!(coverage >= 0.85, "pooled coverage {coverage}");
}

#[test]
fn combine_is_linear_in_members_times_horizon() {
    let members: Vec<String> = (0..8).map(|i| format!("m{i}")).collect();
    let scaler = ZScaler::fit(&[0.0, 1.0, 2.0, 3.0]).unwrap();
    for strategy in [Strategy::WeightedAverage, Strategy::TrimmedMean, Strategy::Median] {
        let time = |h: usize| {
            let forecasts: Vec<Vec<f64>> = (0..8).map(|m| (0..h).map(|t| (t * (m + 1)) as f64 % 7.0).collect()).collect();
            let decision = EnsembleDecision {
                integration_strategy: strategy,
                weights: (strategy == Strategy::WeightedAverage)
                    .then(|| members.iter().map(|m| (m.clone(), 0.125)).collect()),
                selected_model: None,
                reasoning: String::new(),
                confidence: String::new(),
            };
            let start = Instant::now();
            for _ in 0..5 {
                combine(&decision, &members, &forecasts, Some(&scaler), 0.1).unwrap();
            }
            start.elapsed().as_secs_f64()
        };
        time(2_000);
        let (small, large) = (time(20_000), time(200_000));
        // ten times the work; allow generous slack for timer noise
        assert!(large < 40.0 * small.max(1e-4), "{strategy:?}: {small} -> {large}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn slices_are_even_and_full_length(extra in 0usize..400, count in 1usize..40, h in 1usize..50) {
        let t = 64;
        let series = Series::from_values(&vec![1.0; t + h + extra]).unwrap();
        let s = make_slices(&series, t, h, count).unwrap();
        let expected = count.min(extra + 1);
        prop_assert_eq!(s.windows.len(), expected);
        prop_assert_eq!(s.warning.is_some(), count > extra + 1);
        prop_assert_eq!(s.windows[0].start, 0);
        if expected > 1 {
            prop_assert_eq!(s.windows[expected - 1].start, extra);
        }
        for pair in s.windows.windows(2) {
            prop_assert!(pair[0].start < pair[1].start);
        }
        for w in &s.windows {
            prop_assert_eq!(w.input.len(), t);
            prop_assert_eq!(w.test.len(), h);
        }
    }
}
