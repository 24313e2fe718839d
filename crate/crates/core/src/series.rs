//! Series representation, splitting and the two error metrics used everywhere
//! downstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terms whose target magnitude falls below this are excluded from MAPE.
pub const MAPE_ZERO_GUARD: f64 = 1e-8;

/// A uniformly indexed univariate series. Missing observations are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<Option<f64>>,
    start_index: i64,
    step: f64,
}

impl Series {
    pub fn new(values: Vec<Option<f64>>, start_index: i64, step: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            values,
            start_index,
            step,
        })
    }

    pub fn from_options(values: Vec<Option<f64>>) -> Result<Self> {
        Self::new(values, 0, 1.0)
    }

    /// A fully observed series.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_options(values.iter().copied().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.values[i].is_none()
    }

    pub fn missing_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.is_none().then_some(i))
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Observed values in order, skipping gaps.
    pub fn observed(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// The values as a dense slice; fails if anything is missing.
    pub fn dense(&self) -> Result<Vec<f64>> {
        let count = self.missing_count();
        if count > 0 {
            return Err(Error::MissingValues { count });
        }
        Ok(self.observed())
    }

    /// Contiguous sub-series `[start, end)`, keeping the time origin consistent.
    pub fn slice(&self, start: usize, end: usize) -> Result<Series> {
        if end > self.len() || start >= end {
            return Err(Error::InsufficientLength {
                needed: end,
                got: self.len(),
            });
        }
        Series::new(
            self.values[start..end].to_vec(),
            self.start_index + start as i64,
            self.step,
        )
    }

    /// Same origin and spacing, new payload.
    pub fn with_values(&self, values: Vec<Option<f64>>) -> Result<Series> {
        Series::new(values, self.start_index, self.step)
    }

    pub fn with_dense(&self, values: &[f64]) -> Result<Series> {
        self.with_values(values.iter().copied().map(Some).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_len: usize,
    pub val_len: usize,
    pub test_horizon: usize,
}

impl SplitSpec {
    pub fn new(train_len: usize, val_len: usize, test_horizon: usize) -> Result<Self> {
        if train_len == 0 || val_len == 0 || test_horizon == 0 {
            return Err(Error::InvalidParameter(format!(
                "split lengths must be positive, got ({train_len}, {val_len}, {test_horizon})"
            )));
        }
        Ok(Self {
            train_len,
            val_len,
            test_horizon,
        })
    }

    /// Validation length mirrors the horizon, capped at a quarter of the window.
    pub fn for_window(input_len: usize, horizon: usize) -> Result<Self> {
        let val_len = horizon.min(input_len / 4);
        if val_len == 0 || val_len >= input_len {
            return Err(Error::InsufficientLength {
                needed: 4,
                got: input_len,
            });
        }
        Self::new(input_len - val_len, val_len, horizon)
    }

    pub fn input_len(&self) -> usize {
        self.train_len + self.val_len
    }

    pub fn total_len(&self) -> usize {
        self.input_len() + self.test_horizon
    }
}

/// Cut a series into train / validation / test, in temporal order.
pub fn split(series: &Series, spec: SplitSpec) -> Result<(Series, Series, Series)> {
    let needed = spec.total_len();
    if series.len() < needed {
        return Err(Error::InsufficientLength {
            needed,
            got: series.len(),
        });
    }
    let input = series.slice(0, spec.input_len())?;
    let missing = input.missing_count();
    if missing > 0 {
        return Err(Error::MissingValues { count: missing });
    }
    let train = series.slice(0, spec.train_len)?;
    let val = series.slice(spec.train_len, spec.input_len())?;
    let test = series.slice(spec.input_len(), needed)?;
    Ok((train, val, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsPair {
    pub mae: f64,
    pub mape: f64,
}

impl MetricsPair {
    pub fn compute(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        Ok(Self {
            mae: mae(actual, predicted)?,
            mape: mape(actual, predicted)?,
        })
    }
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p).abs())
        .sum();
    Ok(total / actual.len() as f64)
}

/// Mean absolute percentage error on a 0-100 scale. Targets with magnitude
/// below [`MAPE_ZERO_GUARD`] are left out of the average.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    let (sum, used) = actual
        .iter()
        .zip(predicted)
        .filter(|(y, _)| y.abs() >= MAPE_ZERO_GUARD)
        .fold((0.0, 0usize), |(s, n), (y, p)| {
            (s + ((y - p) / y).abs(), n + 1)
        });
    if used == 0 {
        return Err(Error::MapeUndefined);
    }
    Ok(100.0 * sum / used as f64)
}

/// Z-score transform fitted on a reference segment. A zero-spread reference
/// keeps unit scale so the transform stays invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScaler {
    pub mean: f64,
    pub scale: f64,
}

impl ZScaler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        let scale = if std > 1e-12 && std.is_finite() {
            std
        } else {
            1.0
        };
        Ok(Self { mean, scale })
    }

    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            scale: 1.0,
        }
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.scale).collect()
    }

    pub fn inverse(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.scale + self.mean).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mae(&[100.0, 200.0], &[110.0, 180.0]).unwrap(), 15.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
    }

    #[test]
    fn mae_errors() {
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(mae(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn mape_examples() {
        assert!((mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(mape(&[5.0], &[5.0]).unwrap(), 0.0);
        assert!(matches!(
            mape(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::MapeUndefined)
        ));
    }

    #[test]
    fn mape_skips_zero_targets() {
        // only the 100 term survives: |100-90|/100
        let m = mape(&[0.0, 100.0], &[5.0, 90.0]).unwrap();
        assert!((m - 10.0).abs() < 1e-12);
    }

    #[test]
    fn split_examples() {
        let s = Series::from_values(&(0..12).map(f64::from).collect::<Vec<_>>()).unwrap();
        let (a, b, c) = split(&s, SplitSpec::new(6, 2, 4).unwrap()).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (6, 2, 4));
        assert_eq!(b.get(0), Some(6.0));
        assert_eq!(c.start_index(), 8);

        let short = s.slice(0, 11).unwrap();
        assert!(split(&short, SplitSpec::new(6, 2, 4).unwrap()).is_err());

        let long = Series::from_values(&vec![1.0; 512 + 96]).unwrap();
        let (a, b, c) = split(&long, SplitSpec::new(384, 128, 96).unwrap()).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (384, 128, 96));
    }

    #[test]
    fn default_split_rule() {
        assert_eq!(
            SplitSpec::for_window(512, 96).unwrap(),
            SplitSpec::new(416, 96, 96).unwrap()
        );
        assert_eq!(
            SplitSpec::for_window(512, 192).unwrap(),
            SplitSpec::new(384, 128, 192).unwrap()
        );
    }

    #[test]
    fn split_rejects_gaps_in_input() {
        let s = Series::from_options(vec![Some(1.0), None, Some(3.0), Some(4.0)]).unwrap();
        assert!(matches!(
            split(&s, SplitSpec::new(2, 1, 1).unwrap()),
            Err(Error::MissingValues { .. })
        ));
    }

    #[test]
    fn scaler_round_trip() {
        let data = [3.0, 5.0, 7.0];
        let sc = ZScaler::fit(&data).unwrap();
        let back = sc.inverse(&sc.transform(&data));
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(ZScaler::fit(&[2.0, 2.0]).unwrap().scale, 1.0);
    }

    proptest! {
        #[test]
        fn mae_nonneg_and_zero_iff_equal(pairs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1..40)) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = mae(&a, &p).unwrap();
            prop_assert!(m >= 0.0);
            prop_assert_eq!(m == 0.0, a == p);
            prop_assert_eq!(mae(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn metrics_permutation_equivariant(pairs in prop::collection::vec((1.0..1e3f64, -1e3..1e3f64), 1..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (sa, sp): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            prop_assert!((mae(&a, &p).unwrap() - mae(&sa, &sp).unwrap()).abs() < 1e-9);
            prop_assert!((mape(&a, &p).unwrap() - mape(&sa, &sp).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn split_reassembles(n in 3usize..200, t in 1usize..50, v in 1usize..50, h in 1usize..50) {
            let values: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
            let s = Series::from_values(&values).unwrap();
            let spec = SplitSpec::new(t, v, h).unwrap();
            match split(&s, spec) {
                Ok((a, b, c)) => {
                    let joined: Vec<f64> = a.observed().into_iter().chain(b.observed()).chain(c.observed()).collect();
                    prop_assert_eq!(&joined[..], &values[..t + v + h]);
                }
                Err(_) => prop_assert!(n < t + v + h),
            }
        }
    }
}
