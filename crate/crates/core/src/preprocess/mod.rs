//! Quality diagnostics and repair: missing-value filling, outlier detection
//! and outlier handling.

mod detect;
mod repair;

pub use detect::{detect_outliers_iqr, detect_outliers_percentile, detect_outliers_zscore, MAD_SCALE};
pub use repair::{fill_missing, repair_outliers, MissingFill, OutlierHandle, RepairPolicy};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{trend_label, TrendLabel};
use crate::series::Series;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    RollingIqr,
    RollingZscore,
    Percentile,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPolicy {
    pub method: DetectionMethod,
    pub window: usize,
    pub alpha: f64,
    pub robust_center: bool,
    pub lower_pct: f64,
    pub upper_pct: f64,
}

impl Default for DetectionPolicy {
    fn default() -> Self {
        Self {
            method: DetectionMethod::RollingIqr,
            window: 24,
            alpha: 1.5,
            robust_center: false,
            lower_pct: 1.0,
            upper_pct: 99.0,
        }
    }
}

impl DetectionPolicy {
    pub fn robust_zscore(window: usize, alpha: f64) -> Self {
        Self {
            method: DetectionMethod::RollingZscore,
            window,
            alpha,
            robust_center: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.window < 2 {
            return bad(format!("window must be >= 2, got {}", self.window));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(0.0 <= self.lower_pct && self.lower_pct < self.upper_pct && self.upper_pct <= 100.0) {
            return bad(format!(
                "percentile bounds ({}, {}) are invalid",
                self.lower_pct, self.upper_pct
            ));
        }
        Ok(())
    }

    /// Run the configured detector. Rolling windows longer than the series
    /// shrink to the series length.
    pub fn detect(&self, series: &Series) -> Result<Vec<usize>> {
        self.validate()?;
        let window = self.window.min(series.len());
        match self.method {
            DetectionMethod::None => Ok(Vec::new()),
            DetectionMethod::RollingIqr if window < 4 => Ok(Vec::new()),
            DetectionMethod::RollingIqr => detect_outliers_iqr(series, window, self.alpha),
            DetectionMethod::RollingZscore => {
                detect_outliers_zscore(series, window, self.alpha, self.robust_center)
            }
            DetectionMethod::Percentile => {
                detect_outliers_percentile(series, self.lower_pct, self.upper_pct, None)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub trend: TrendLabel,
}

impl BasicStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::AllMissing);
        }
        Ok(Self {
            mean: stats::mean(values),
            std: stats::std_dev(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            skewness: stats::skewness(values),
            excess_kurtosis: stats::excess_kurtosis(values),
            trend: trend_label(values),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityDiagnostics {
    pub len: usize,
    pub stats: BasicStats,
    pub missing_indices: Vec<usize>,
    pub outlier_indices: Vec<usize>,
    pub detection: DetectionPolicy,
    pub repair: RepairPolicy,
    pub quality_score: f64,
}

impl QualityDiagnostics {
    pub fn missing_fraction(&self) -> f64 {
        self.missing_indices.len() as f64 / self.len as f64
    }

    pub fn outlier_fraction(&self) -> f64 {
        self.outlier_indices.len() as f64 / self.len as f64
    }
}

/// Inventory the raw series under a provisional policy. Outliers are searched
/// on an interpolated copy and never include missing positions.
pub fn diagnose(series: &Series, detection: &DetectionPolicy, repair: &RepairPolicy) -> Result<QualityDiagnostics> {
    let observed = series.observed();
    let stats = BasicStats::of(&observed)?;
    let missing_indices = series.missing_indices();
    let filled = fill_missing(
        series,
        &RepairPolicy {
            missing_fill: MissingFill::Interpolate,
            ..*repair
        },
    )?;
    let outlier_indices: Vec<usize> = detection
        .detect(&filled)?
        .into_iter()
        .filter(|i| !series.is_missing(*i))
        .collect();
    let n = series.len() as f64;
    let quality_score =
        (1.0 - (missing_indices.len() + outlier_indices.len()) as f64 / n).clamp(0.0, 1.0);
    Ok(QualityDiagnostics {
        len: series.len(),
        stats,
        missing_indices,
        outlier_indices,
        detection: *detection,
        repair: *repair,
        quality_score,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanOutcome {
    pub series: Series,
    pub filled: Vec<usize>,
    pub repaired: Vec<usize>,
}

/// Fill gaps first so detection windows are dense, then detect and repair.
/// Policies that remove points are refused: downstream stages rely on
/// contiguous indexing.
pub fn clean(series: &Series, detection: &DetectionPolicy, repair: &RepairPolicy) -> Result<CleanOutcome> {
    if repair.missing_fill == MissingFill::Drop || repair.outlier_handle == OutlierHandle::Drop {
        return Err(Error::InvalidParameter(
            "drop would break contiguous indexing".into(),
        ));
    }
    let filled_idx = series.missing_indices();
    let filled = fill_missing(series, repair)?;
    let flags = detection.detect(&filled)?;
    let repaired = if flags.is_empty() {
        filled
    } else {
        repair_outliers(&filled, &flags, repair)?
    };
    Ok(CleanOutcome {
        series: repaired,
        filled: filled_idx,
        repaired: flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_sine(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|t| 10.0 + (t as f64 * std::f64::consts::TAU / 24.0).sin() + rng.gen_range(-0.2..0.2))
            .collect()
    }

    #[test]
    fn diagnostics_keep_missing_and_outliers_apart() {
        let mut v: Vec<Option<f64>> = noisy_sine(1, 200).into_iter().map(Some).collect();
        v[50] = None;
        v[120] = Some(80.0);
        let s = Series::from_options(v).unwrap();
        let d = diagnose(&s, &DetectionPolicy::default(), &RepairPolicy::default()).unwrap();
        assert_eq!(d.missing_indices, vec![50]);
        assert!(d.outlier_indices.contains(&120));
        assert!(!d.outlier_indices.contains(&50));
        assert!(d.quality_score > 0.9 && d.quality_score < 1.0);
    }

    #[test]
    fn clean_refuses_drop() {
        let s = Series::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let repair = RepairPolicy {
            outlier_handle: OutlierHandle::Drop,
            ..RepairPolicy::default()
        };
        assert!(clean(&s, &DetectionPolicy::default(), &repair).is_err());
    }

    #[test]
    fn fill_leaves_observed_bits_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for fill in [
            MissingFill::Interpolate,
            MissingFill::Ffill,
            MissingFill::Bfill,
            MissingFill::LocalMean,
            MissingFill::LocalMedian,
            MissingFill::Zero,
        ] {
            for _ in 0..50 {
                let n = rng.gen_range(1..60);
                let mut v: Vec<Option<f64>> = (0..n)
                    .map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(-5.0..5.0)))
                    .collect();
                if v.iter().all(Option::is_none) {
                    v[0] = Some(1.0);
                }
                let s = Series::from_options(v.clone()).unwrap();
                let policy = RepairPolicy {
                    missing_fill: fill,
                    ..RepairPolicy::default()
                };
                let out = fill_missing(&s, &policy).unwrap();
                assert_eq!(out.missing_count(), 0);
                for (a, b) in v.iter().zip(out.values()) {
                    if let Some(a) = a {
                        assert_eq!(a.to_bits(), b.unwrap().to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn repaired_positions_are_not_reflagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for handle in [OutlierHandle::Clip, OutlierHandle::Interpolate, OutlierHandle::LocalMedian] {
            for trial in 0..40 {
                let mut v = noisy_sine(100 + trial, 240);
                for _ in 0..4 {
                    let at = rng.gen_range(30..240);
                    v[at] += if rng.gen_bool(0.5) { 15.0 } else { -15.0 };
                }
                let s = Series::from_values(&v).unwrap();
                let det = DetectionPolicy::default();
                let flags = det.detect(&s).unwrap();
                let policy = RepairPolicy {
                    outlier_handle: handle,
                    ..RepairPolicy::default()
                };
                let fixed = repair_outliers(&s, &flags, &policy).unwrap();
                let again = det.detect(&fixed).unwrap();
                if handle != OutlierHandle::Clip {
                    for f in &flags {
                        assert!(!again.contains(f), "{handle:?} left {f} flagged");
                    }
                }
                assert!(again.len() <= flags.len());
            }
        }
    }

    #[test]
    fn winsorization_keeps_clean_order() {
        let v = [3.0, 1.0, 40.0, 2.0, -30.0, 5.0];
        let s = Series::from_values(&v).unwrap();
        let policy = RepairPolicy {
            outlier_handle: OutlierHandle::Clip,
            ..RepairPolicy::default()
        };
        let out = repair_outliers(&s, &[2, 4], &policy).unwrap().dense().unwrap();
        assert_eq!(out, vec![3.0, 1.0, 5.0, 2.0, 1.0, 5.0]);
        let clean_before: Vec<f64> = [0, 1, 3, 5].iter().map(|&i| v[i]).collect();
        let clean_after: Vec<f64> = [0, 1, 3, 5].iter().map(|&i| out[i]).collect();
        assert_eq!(clean_before, clean_after);
    }
}
