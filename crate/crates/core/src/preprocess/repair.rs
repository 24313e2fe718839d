use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats::{mean, median};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierHandle {
    Clip,
    Interpolate,
    Ffill,
    Bfill,
    LocalMean,
    LocalMedian,
    Smooth,
    Zero,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingFill {
    Interpolate,
    Ffill,
    Bfill,
    LocalMean,
    LocalMedian,
    Zero,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairPolicy {
    pub outlier_handle: OutlierHandle,
    pub missing_fill: MissingFill,
    pub neighborhood: usize,
    pub smooth_window: usize,
}

impl Default for RepairPolicy {
    fn default() -> Self {
        Self {
            outlier_handle: OutlierHandle::Interpolate,
            missing_fill: MissingFill::Interpolate,
            neighborhood: 12,
            smooth_window: 3,
        }
    }
}

impl RepairPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.neighborhood == 0 || self.smooth_window == 0 {
            return Err(Error::InvalidParameter(
                "neighborhood and smooth_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// How a position marked bad gets its new value, given the clean positions.
#[derive(Clone, Copy)]
enum Fill {
    Interpolate,
    Ffill,
    Bfill,
    LocalMean,
    LocalMedian,
    Zero,
}

/// Replace every `bad` position; `clean` positions are never touched.
fn replace(values: &[Option<f64>], bad: &[bool], fill: Fill, neighborhood: usize) -> Vec<Option<f64>> {
    let clean: Vec<usize> = (0..values.len())
        .filter(|&i| !bad[i] && values[i].is_some())
        .collect();
    let value = |i: usize| values[i].expect("clean positions are observed");
    let mut out = values.to_vec();
    for t in (0..values.len()).filter(|&t| bad[t]) {
        // clean[..split] lie before t, clean[split..] after
        let split = clean.partition_point(|&c| c < t);
        let prev = split.checked_sub(1).map(|j| clean[j]);
        let next = clean.get(split).copied();
        let new = match fill {
            Fill::Zero => 0.0,
            Fill::Interpolate => match (prev, next) {
                (Some(a), Some(b)) => {
                    let (xa, xb) = (value(a), value(b));
                    xa + (t - a) as f64 / (b - a) as f64 * (xb - xa)
                }
                (Some(a), None) => value(a),
                (None, Some(b)) => value(b),
                (None, None) => unreachable!("caller guarantees a clean point"),
            },
            Fill::Ffill => value(prev.or(next).expect("clean point exists")),
            Fill::Bfill => value(next.or(prev).expect("clean point exists")),
            Fill::LocalMean | Fill::LocalMedian => {
                let hood: Vec<f64> = if split > 0 {
                    clean[split.saturating_sub(neighborhood)..split]
                        .iter()
                        .map(|&i| value(i))
                        .collect()
                } else {
                    clean.iter().take(neighborhood).map(|&i| value(i)).collect()
                };
                if matches!(fill, Fill::LocalMean) {
                    mean(&hood)
                } else {
                    median(&hood)
                }
            }
        };
        out[t] = Some(new);
    }
    out
}

/// Causal moving average; the first points average whatever history exists.
fn causal_smooth(values: &[Option<f64>], width: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|t| {
            values[t]?;
            let lo = (t + 1).saturating_sub(width);
            let hood: Vec<f64> = values[lo..=t].iter().flatten().copied().collect();
            Some(mean(&hood))
        })
        .collect()
}

fn flag_mask(len: usize, flags: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; len];
    for &f in flags {
        if f >= len {
            return Err(Error::InvalidParameter(format!(
                "flag index {f} outside series of length {len}"
            )));
        }
        mask[f] = true;
    }
    Ok(mask)
}

/// Replace flagged points according to `policy.outlier_handle`.
pub fn repair_outliers(series: &Series, flags: &[usize], policy: &RepairPolicy) -> Result<Series> {
    policy.validate()?;
    let values = series.values();
    let bad = flag_mask(values.len(), flags)?;
    let clean: Vec<f64> = values
        .iter()
        .zip(&bad)
        .filter_map(|(v, b)| if *b { None } else { *v })
        .collect();
    if clean.is_empty() {
        return Err(Error::AllFlagged);
    }
    let nb = policy.neighborhood;
    let out = match policy.outlier_handle {
        OutlierHandle::Clip => {
            let lo = clean.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = clean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            values
                .iter()
                .zip(&bad)
                .map(|(v, b)| if *b { v.map(|x| x.clamp(lo, hi)) } else { *v })
                .collect()
        }
        OutlierHandle::Interpolate => replace(values, &bad, Fill::Interpolate, nb),
        OutlierHandle::Ffill => replace(values, &bad, Fill::Ffill, nb),
        OutlierHandle::Bfill => replace(values, &bad, Fill::Bfill, nb),
        OutlierHandle::LocalMean => replace(values, &bad, Fill::LocalMean, nb),
        OutlierHandle::LocalMedian => replace(values, &bad, Fill::LocalMedian, nb),
        OutlierHandle::Zero => replace(values, &bad, Fill::Zero, nb),
        OutlierHandle::Smooth => {
            let patched = replace(values, &bad, Fill::Interpolate, nb);
            causal_smooth(&patched, policy.smooth_window)
        }
        OutlierHandle::Drop => values
            .iter()
            .zip(&bad)
            .filter(|(_, b)| !**b)
            .map(|(v, _)| *v)
            .collect(),
    };
    series.with_values(out)
}

/// Fill every missing entry according to `policy.missing_fill`.
pub fn fill_missing(series: &Series, policy: &RepairPolicy) -> Result<Series> {
    policy.validate()?;
    let values = series.values();
    let bad: Vec<bool> = values.iter().map(Option::is_none).collect();
    if !bad.iter().any(|b| *b) {
        return Ok(series.clone());
    }
    let all_missing = bad.iter().all(|b| *b);
    let nb = policy.neighborhood;
    let out = match policy.missing_fill {
        MissingFill::Zero => replace(values, &bad, Fill::Zero, nb),
        _ if all_missing => return Err(Error::AllMissing),
        MissingFill::Interpolate => replace(values, &bad, Fill::Interpolate, nb),
        MissingFill::Ffill => replace(values, &bad, Fill::Ffill, nb),
        MissingFill::Bfill => replace(values, &bad, Fill::Bfill, nb),
        MissingFill::LocalMean => replace(values, &bad, Fill::LocalMean, nb),
        MissingFill::LocalMedian => replace(values, &bad, Fill::LocalMedian, nb),
        MissingFill::Drop => values.iter().filter(|v| v.is_some()).copied().collect(),
    };
    series.with_values(out)
}
