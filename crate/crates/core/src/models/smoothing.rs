//! Simple, Holt and additive Holt-Winters exponential smoothing. Smoothing
//! parameters the configuration leaves open are fit by a coarse grid over (0, 1)
//! followed by a finer grid around the coarse optimum, minimising one-step SSE.

use super::ModelSpec;
use crate::stats;

pub(super) struct Setup {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    trend: bool,
    period: Option<usize>,
}

impl Setup {
    pub(super) fn from_spec(spec: &ModelSpec) -> Self {
        let seasonal = spec.flag("seasonal");
        Self {
            alpha: spec.real("alpha"),
            beta: spec.real("beta"),
            gamma: spec.real("gamma"),
            trend: spec.flag("trend"),
            period: seasonal.then(|| spec.count("period")),
        }
    }
}

struct Fitted {
    sse: f64,
    level: f64,
    slope: f64,
    season: Vec<f64>,
}

fn filter(x: &[f64], alpha: f64, beta: f64, gamma: f64, trend: bool, period: Option<usize>) -> Fitted {
    let n = x.len();
    let (mut level, mut slope, mut season, start) = match period {
        Some(m) => {
            let first = stats::mean(&x[..m]);
            let slope = if trend {
                (stats::mean(&x[m..2 * m]) - first) / m as f64
            } else {
                0.0
            };
            let season: Vec<f64> = x[..m].iter().map(|v| v - first).collect();
            (first, slope, season, m)
        }
        None => {
            let slope = if trend && n > 1 { x[1] - x[0] } else { 0.0 };
            (x[0], slope, vec![0.0], 1)
        }
    };
    let m = season.len();
    let mut sse = 0.0;
    for (t, &obs) in x.iter().enumerate().skip(start) {
        let s_old = season[t % m];
        let err = obs - (level + slope + s_old);
        sse += err * err;
        let new_level = alpha * (obs - s_old) + (1.0 - alpha) * (level + slope);
        if period.is_some() {
            season[t % m] = gamma * (obs - level - slope) + (1.0 - gamma) * s_old;
        }
        if trend {
            slope = beta * (new_level - level) + (1.0 - beta) * slope;
        }
        level = new_level;
    }
    Fitted {
        sse,
        level,
        slope,
        season,
    }
}

/// Search the free parameters (those that are `None`) on a 0.1 grid, then
/// on a 0.01 grid within +-0.05 of the best point.
fn fit_free(fixed: [Option<f64>; 3], objective: impl Fn([f64; 3]) -> f64) -> [f64; 3] {
    let free: Vec<usize> = (0..3).filter(|&i| fixed[i].is_none()).collect();
    let mut best = fixed.map(|v| v.unwrap_or(0.5));
    if free.is_empty() {
        return best;
    }
    let search = |centre: [f64; 3], grid: &dyn Fn(f64) -> Vec<f64>| {
        let axes: Vec<Vec<f64>> = free.iter().map(|&i| grid(centre[i])).collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut best_point = centre;
        let mut best_sse = f64::INFINITY;
        for mut idx in 0..total {
            let mut point = centre;
            for (axis, &i) in axes.iter().zip(&free).rev() {
                point[i] = axis[idx % axis.len()];
                idx /= axis.len();
            }
            let sse = objective(point);
            if sse < best_sse {
                best_sse = sse;
                best_point = point;
            }
        }
        best_point
    };
    let coarse = |_: f64| (0..10).map(|k| 0.05 + 0.1 * k as f64).collect::<Vec<_>>();
    best = search(best, &coarse);
    let fine = |c: f64| {
        (-5..=5)
            .map(|k| c + 0.01 * k as f64)
            .filter(|v| *v > 0.0 && *v <= 1.0)
            .collect::<Vec<_>>()
    };
    search(best, &fine)
}

pub(super) fn forecast(x: &[f64], setup: &Setup, horizon: usize) -> Vec<f64> {
    let fixed = [
        setup.alpha,
        if setup.trend { setup.beta } else { Some(0.0) },
        if setup.period.is_some() { setup.gamma } else { Some(0.0) },
    ];
    let [a, b, g] = fit_free(fixed, |[a, b, g]| filter(x, a, b, g, setup.trend, setup.period).sse);
    let f = filter(x, a, b, g, setup.trend, setup.period);
    let m = f.season.len();
    let n = x.len();
    (1..=horizon)
        .map(|h| {
            let s = if setup.period.is_some() {
                f.season[(n - 1 + h) % m]
            } else {
                0.0
            };
            f.level + h as f64 * f.slope + s
        })
        .collect()
}
