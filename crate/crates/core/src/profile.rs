//! Temporal structure: rolling statistics, additive decomposition, the
//! correlogram, a unit-root test, and the summary profile that drives model
//! selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats;

/// Lag count for correlograms unless the series is too short.
pub const DEFAULT_MAX_LAG: usize = 40;
/// Large-sample 5% critical value for the constant-only Dickey-Fuller test.
pub const ADF_CRITICAL_5PCT: f64 = -2.86;
/// A significant ACF peak only counts as seasonality above this strength.
pub const MIN_SEASONAL_STRENGTH: f64 = 0.2;
/// Label threshold on |slope| * n / range.
const TREND_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendLabel {
    Increasing,
    Decreasing,
    Stable,
}

impl std::fmt::Display for TrendLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrendLabel::Increasing => "increasing",
            TrendLabel::Decreasing => "decreasing",
            TrendLabel::Stable => "stable",
        })
    }
}

/// Direction of the least-squares line, relative to the value range.
pub fn trend_label(values: &[f64]) -> TrendLabel {
    let (slope, _) = stats::linear_fit(values);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) || slope.abs() * values.len() as f64 / range <= TREND_RATIO {
        TrendLabel::Stable
    } else if slope > 0.0 {
        TrendLabel::Increasing
    } else {
        TrendLabel::Decreasing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingStats {
    pub window: usize,
    /// Index of the first entry; earlier points lack a full window.
    pub offset: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Trailing mean and population standard deviation.
pub fn rolling_stats(series: &Series, window: usize) -> Result<RollingStats> {
    let x = series.dense()?;
    if window < 2 {
        return Err(Error::InvalidParameter(format!("window must be >= 2, got {window}")));
    }
    if window > x.len() {
        return Err(Error::InsufficientLength {
            needed: window,
            got: x.len(),
        });
    }
    let (means, stds) = x
        .windows(window)
        .map(|w| (stats::mean(w), stats::std_dev(w)))
        .unzip();
    Ok(RollingStats {
        window,
        offset: window - 1,
        means,
        stds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub period: usize,
    pub observed: Vec<f64>,
    /// `None` in the half-window margins.
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<Option<f64>>,
}

impl Decomposition {
    /// Indices where trend (and so residual) is defined.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.observed.len()).filter(|&t| self.trend[t].is_some())
    }
}

/// Classical additive decomposition with a centred moving-average trend.
pub fn decompose(series: &Series, period: usize) -> Result<Decomposition> {
    let x = series.dense()?;
    let n = x.len();
    if period < 2 {
        return Err(Error::InvalidParameter(format!("period must be >= 2, got {period}")));
    }
    if n < 2 * period {
        return Err(Error::InsufficientLength {
            needed: 2 * period,
            got: n,
        });
    }
    let half = period / 2;
    let p = period as f64;
    let mut trend = vec![None; n];
    for (t, slot) in trend.iter_mut().enumerate().take(n - half).skip(half) {
        let v = if period.is_multiple_of(2) {
            let inner: f64 = x[t + 1 - half..t + half].iter().sum();
            (0.5 * x[t - half] + inner + 0.5 * x[t + half]) / p
        } else {
            x[t - half..=t + half].iter().sum::<f64>() / p
        };
        *slot = Some(v);
    }

    let mut phase_sum = vec![0.0; period];
    let mut phase_cnt = vec![0usize; period];
    for t in 0..n {
        if let Some(tr) = trend[t] {
            phase_sum[t % period] += x[t] - tr;
            phase_cnt[t % period] += 1;
        }
    }
    let mut phase: Vec<f64> = phase_sum
        .iter()
        .zip(&phase_cnt)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect();
    let centre = stats::mean(&phase);
    phase.iter_mut().for_each(|v| *v -= centre);

    let seasonal: Vec<f64> = (0..n).map(|t| phase[t % period]).collect();
    let residual = (0..n)
        .map(|t| trend[t].map(|tr| x[t] - tr - seasonal[t]))
        .collect();
    Ok(Decomposition {
        period,
        observed: x,
        trend,
        seasonal,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramData {
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub confidence_band: f64,
    pub n: usize,
}

fn acf_values(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let m = stats::mean(x);
    let dev: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            let num: f64 = dev[..dev.len() - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
            (num / denom).clamp(-1.0, 1.0)
        })
        .collect())
}

/// Durbin-Levinson recursion from autocorrelations to partial autocorrelations.
fn pacf_from_acf(acf: &[f64]) -> Vec<f64> {
    let max_lag = acf.len() - 1;
    let mut pacf = vec![0.0; max_lag + 1];
    pacf[0] = 1.0;
    if max_lag == 0 {
        return pacf;
    }
    let mut phi = vec![acf[1]];
    pacf[1] = acf[1];
    for k in 2..=max_lag {
        let num = acf[k] - (1..k).map(|j| phi[j - 1] * acf[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * acf[j]).sum::<f64>();
        if den.abs() < 1e-12 {
            break;
        }
        let kk = (num / den).clamp(-1.0, 1.0);
        let next: Vec<f64> = (1..k).map(|j| phi[j - 1] - kk * phi[k - j - 1]).collect();
        phi = next;
        phi.push(kk);
        pacf[k] = kk;
    }
    pacf
}

/// Biased-estimator ACF and Durbin-Levinson PACF with the +-1.96/sqrt(n) band.
pub fn acf_pacf(series: &Series, max_lag: usize) -> Result<CorrelogramData> {
    let x = series.dense()?;
    if x.len() <= max_lag {
        return Err(Error::InsufficientLength {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let acf = acf_values(&x, max_lag).map_err(|_| Error::Degenerate("degenerate series".into()))?;
    let pacf = pacf_from_acf(&acf);
    Ok(CorrelogramData {
        acf,
        pacf,
        confidence_band: 1.96 / (x.len() as f64).sqrt(),
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityTest {
    pub is_stationary: bool,
    pub statistic: f64,
    pub critical_value: f64,
    pub lags: usize,
}

/// Augmented Dickey-Fuller regression with a constant and
/// floor((n-1)^(1/3)) lagged differences.
pub fn stationarity_test(series: &Series) -> Result<StationarityTest> {
    let y = series.dense()?;
    let n = y.len();
    if n < 32 {
        return Err(Error::InsufficientLength { needed: 32, got: n });
    }
    if !(stats::variance(&y) > 0.0) {
        return Err(Error::Degenerate("zero-variance regression".into()));
    }
    let lags = ((n - 1) as f64).cbrt().floor() as usize;
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[t-1] = y[t] - y[t-1]
    let mut rows = Vec::new();
    let mut target = Vec::new();
    for t in (lags + 1)..n {
        let mut row = vec![1.0, y[t - 1]];
        row.extend((1..=lags).map(|i| dy[t - 1 - i]));
        rows.push(row);
        target.push(dy[t - 1]);
    }
    let fit = stats::ols(&rows, &target)?;
    let statistic = fit.coefficients[1] / fit.std_errors[1];
    if !statistic.is_finite() {
        return Err(Error::Degenerate("non-finite test statistic".into()));
    }
    Ok(StationarityTest {
        is_stationary: statistic < ADF_CRITICAL_5PCT,
        statistic,
        critical_value: ADF_CRITICAL_5PCT,
        lags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendInfo {
    pub label: TrendLabel,
    pub strength: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalityInfo {
    pub detected: bool,
    pub period: Option<usize>,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionInfo {
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalProfile {
    pub n: usize,
    pub trend: TrendInfo,
    pub seasonality: SeasonalityInfo,
    /// `None` when the test regression is degenerate (an exact fit, such as a
    /// noiseless line); such a series is treated as non-stationary.
    pub stationarity: Option<StationarityTest>,
    pub intermittency: f64,
    pub distribution: DistributionInfo,
}

impl TemporalProfile {
    pub fn is_stationary(&self) -> bool {
        self.stationarity.is_some_and(|s| s.is_stationary)
    }
}

/// 1 - Var(residual) / Var(component + residual) over interior points.
fn strength(component: &[f64], residual: &[f64]) -> f64 {
    let combined: Vec<f64> = component.iter().zip(residual).map(|(c, r)| c + r).collect();
    let denom = stats::variance(&combined);
    if !(denom > 0.0) {
        return 0.0;
    }
    (1.0 - stats::variance(residual) / denom).clamp(0.0, 1.0)
}

fn component_strengths(d: &Decomposition) -> (f64, f64) {
    let idx: Vec<usize> = d.interior().collect();
    if idx.len() < 2 {
        return (0.0, 0.0);
    }
    let r: Vec<f64> = idx.iter().map(|&t| d.residual[t].unwrap()).collect();
    let tr: Vec<f64> = idx.iter().map(|&t| d.trend[t].unwrap()).collect();
    let s: Vec<f64> = idx.iter().map(|&t| d.seasonal[t]).collect();
    (strength(&tr, &r), strength(&s, &r))
}

/// Highest significant local ACF peak of the linearly detrended series.
fn seasonal_peak(x: &[f64]) -> Option<usize> {
    let max_lag = DEFAULT_MAX_LAG.min(x.len() / 2);
    if max_lag < 3 {
        return None;
    }
    let (slope, icpt) = stats::linear_fit(x);
    let detrended: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(t, v)| v - (icpt + slope * t as f64))
        .collect();
    let acf = acf_values(&detrended, max_lag).ok()?;
    let band = 1.96 / (x.len() as f64).sqrt();
    let mut best: Option<usize> = None;
    for k in 2..max_lag {
        let peak = acf[k] >= acf[k - 1] && acf[k] >= acf[k + 1];
        if peak && acf[k] > band && best.is_none_or(|b| acf[k] > acf[b]) {
            best = Some(k);
        }
    }
    best
}

pub fn build_profile(series: &Series) -> Result<TemporalProfile> {
    let x = series.dense()?;
    let n = x.len();
    let stationarity = match stationarity_test(series) {
        Ok(t) => Some(t),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let (slope, _) = stats::linear_fit(&x);

    let mut seasonality = SeasonalityInfo {
        detected: false,
        period: None,
        strength: 0.0,
    };
    let mut trend_strength = None;
    if let Some(period) = seasonal_peak(&x).filter(|p| n >= 2 * p) {
        let d = decompose(series, period)?;
        let (ts, ss) = component_strengths(&d);
        if ss >= MIN_SEASONAL_STRENGTH {
            seasonality = SeasonalityInfo {
                detected: true,
                period: Some(period),
                strength: ss,
            };
            trend_strength = Some(ts);
        }
    }
    let trend_strength = match trend_strength {
        Some(ts) => ts,
        None => {
            let fallback = 24.min(n / 2).max(2);
            component_strengths(&decompose(series, fallback)?).0
        }
    };

    let zeros = x.iter().filter(|v| **v == 0.0).count();
    Ok(TemporalProfile {
        n,
        trend: TrendInfo {
            label: trend_label(&x),
            strength: trend_strength,
            slope,
        },
        seasonality,
        stationarity,
        intermittency: zeros as f64 / n as f64,
        distribution: DistributionInfo {
            skewness: stats::skewness(&x),
            excess_kurtosis: stats::excess_kurtosis(&x),
        },
    })
}
