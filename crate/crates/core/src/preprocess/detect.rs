//! Outlier detectors. Rolling detectors look at a trailing window made of the
//! `window` most recent observed values up to and including the candidate, so a
//! flag at `t` never depends on anything after `t`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats::{quantile_sorted, sorted};

/// 1.4826 * MAD estimates the standard deviation under normality.
pub const MAD_SCALE: f64 = 1.4826;

/// Trailing window kept both in arrival order and sorted.
struct TrailingWindow {
    cap: usize,
    arrival: VecDeque<f64>,
    ordered: Vec<f64>,
}

impl TrailingWindow {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            arrival: VecDeque::with_capacity(cap + 1),
            ordered: Vec::with_capacity(cap + 1),
        }
    }

    fn push(&mut self, x: f64) {
        let at = self.ordered.partition_point(|v| v.total_cmp(&x).is_lt());
        self.ordered.insert(at, x);
        self.arrival.push_back(x);
        if self.arrival.len() > self.cap {
            let old = self.arrival.pop_front().expect("non-empty window");
            let at = self.ordered.partition_point(|v| v.total_cmp(&old).is_lt());
            self.ordered.remove(at);
        }
    }

    fn is_full(&self) -> bool {
        self.arrival.len() == self.cap
    }

    fn mean_std(&self) -> (f64, f64) {
        let n = self.arrival.len() as f64;
        let mean = self.arrival.iter().sum::<f64>() / n;
        let var = self.arrival.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    fn median_mad(&self) -> (f64, f64) {
        let med = quantile_sorted(&self.ordered, 0.5);
        let dev: Vec<f64> = self.ordered.iter().map(|v| (v - med).abs()).collect();
        (med, quantile_sorted(&sorted(&dev), 0.5))
    }
}

fn check_window(series: &Series, window: usize, min: usize) -> Result<()> {
    if window < min {
        return Err(Error::InvalidParameter(format!(
            "window must be at least {min}, got {window}"
        )));
    }
    if window > series.len() {
        return Err(Error::InsufficientLength {
            needed: window,
            got: series.len(),
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(())
}

/// Rolling IQR fences: flag when outside `[Q1 - a*IQR, Q3 + a*IQR]`.
pub fn detect_outliers_iqr(series: &Series, window: usize, alpha: f64) -> Result<Vec<usize>> {
    check_window(series, window, 4)?;
    check_alpha(alpha)?;
    let mut win = TrailingWindow::new(window);
    let mut flags = Vec::new();
    for (t, v) in series.values().iter().enumerate() {
        let Some(x) = *v else { continue };
        win.push(x);
        if !win.is_full() {
            continue;
        }
        let q1 = quantile_sorted(&win.ordered, 0.25);
        let q3 = quantile_sorted(&win.ordered, 0.75);
        let iqr = q3 - q1;
        if x < q1 - alpha * iqr || x > q3 + alpha * iqr {
            flags.push(t);
        }
    }
    Ok(flags)
}

/// Rolling z-score; with `robust` the centre is the median and the scale
/// 1.4826 * MAD. A window with zero scale flags nothing.
pub fn detect_outliers_zscore(
    series: &Series,
    window: usize,
    alpha: f64,
    robust: bool,
) -> Result<Vec<usize>> {
    check_window(series, window, 2)?;
    check_alpha(alpha)?;
    let mut win = TrailingWindow::new(window);
    let mut flags = Vec::new();
    for (t, v) in series.values().iter().enumerate() {
        let Some(x) = *v else { continue };
        win.push(x);
        if !win.is_full() {
            continue;
        }
        let (centre, scale) = if robust {
            let (med, mad) = win.median_mad();
            (med, MAD_SCALE * mad)
        } else {
            win.mean_std()
        };
        if scale > 0.0 && (x - centre).abs() / scale > alpha {
            flags.push(t);
        }
    }
    Ok(flags)
}

/// Static percentile bounds, from `frozen_on` when given, else from the
/// series itself. Percentages are on a 0-100 scale.
pub fn detect_outliers_percentile(
    series: &Series,
    lower_pct: f64,
    upper_pct: f64,
    frozen_on: Option<&Series>,
) -> Result<Vec<usize>> {
    if !(0.0..100.0).contains(&lower_pct) || upper_pct > 100.0 || lower_pct >= upper_pct {
        return Err(Error::InvalidParameter(format!(
            "percentile bounds ({lower_pct}, {upper_pct}) are invalid"
        )));
    }
    let reference = frozen_on.unwrap_or(series).observed();
    if reference.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ordered = sorted(&reference);
    let lo = quantile_sorted(&ordered, lower_pct / 100.0);
    let hi = quantile_sorted(&ordered, upper_pct / 100.0);
    Ok(series
        .values()
        .iter()
        .enumerate()
        .filter_map(|(t, v)| v.filter(|x| *x < lo || *x > hi).map(|_| t))
        .collect())
}
