use crate::stats;

pub(super) fn random_walk(x: &[f64], drift: bool, horizon: usize) -> Vec<f64> {
    let last = x[x.len() - 1];
    let step = if drift && x.len() > 1 {
        (last - x[0]) / (x.len() - 1) as f64
    } else {
        0.0
    };
    (1..=horizon).map(|h| last + step * h as f64).collect()
}

/// Each step is the mean of the trailing window, which then absorbs it.
pub(super) fn moving_average(x: &[f64], window: usize, horizon: usize) -> Vec<f64> {
    let mut buf: Vec<f64> = x[x.len() - window..].to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = stats::mean(&buf[buf.len() - window..]);
        buf.push(next);
        out.push(next);
    }
    out
}

fn ses_level(x: &[f64], alpha: f64) -> f64 {
    x[1..].iter().fold(x[0], |level, v| level + alpha * (v - level))
}

/// Theta(0, 2): average of the extrapolated regression line and simple
/// smoothing of the doubled-curvature line.
pub(super) fn theta(x: &[f64], alpha: f64, horizon: usize) -> Vec<f64> {
    let (slope, icpt) = stats::linear_fit(x);
    let theta2: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(t, v)| 2.0 * v - (icpt + slope * t as f64))
        .collect();
    let level = ses_level(&theta2, alpha);
    let n = x.len() as f64;
    (1..=horizon)
        .map(|h| 0.5 * (icpt + slope * (n - 1.0 + h as f64)) + 0.5 * level)
        .collect()
}

/// Croston: smooth nonzero demand sizes and the gaps between them.
pub(super) fn croston(x: &[f64], alpha: f64, horizon: usize) -> Vec<f64> {
    let mut state: Option<(f64, f64)> = None;
    let mut last_demand: Option<usize> = None;
    for (t, &v) in x.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        state = Some(match (state, last_demand) {
            (Some((z, p)), Some(prev)) => {
                let q = (t - prev) as f64;
                (z + alpha * (v - z), p + alpha * (q - p))
            }
            _ => (v, (t + 1) as f64),
        });
        last_demand = Some(t);
    }
    let rate = state.map_or(0.0, |(z, p)| z / p);
    vec![rate; horizon]
}
