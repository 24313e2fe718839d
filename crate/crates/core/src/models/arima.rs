//! ARIMA(p, d, q) estimated by Hannan-Rissanen: a long autoregression supplies
//! innovation proxies, then one least-squares regression on lagged values and
//! lagged proxies gives the AR and MA coefficients.

use crate::error::{Error, Result};
use crate::models::ModelId;
use crate::stats;

fn difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn lagged_rows(w: &[f64], e: &[f64], p: usize, q: usize, from: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for t in from..w.len() {
        let mut row: Vec<f64> = (1..=p).map(|i| w[t - i]).collect();
        row.extend((1..=q).map(|j| e[t - j]));
        rows.push(row);
        y.push(w[t]);
    }
    (rows, y)
}

fn fail(reason: &str) -> Error {
    Error::ModelFailure {
        model: ModelId::Arima,
        reason: reason.into(),
    }
}

pub(super) fn forecast(x: &[f64], p: usize, d: usize, q: usize, horizon: usize) -> Result<Vec<f64>> {
    // keep the last value of every differencing level to undo it later
    let mut levels = vec![x.to_vec()];
    for _ in 0..d {
        let next = difference(levels.last().unwrap());
        levels.push(next);
    }
    let z = levels.last().unwrap();
    let n = z.len();
    // a constant only when the series is not differenced
    let mu = if d == 0 { stats::mean(z) } else { 0.0 };
    let w: Vec<f64> = z.iter().map(|v| v - mu).collect();

    let mut e = vec![0.0; n];
    let (phi, theta) = if p == 0 && q == 0 {
        (Vec::new(), Vec::new())
    } else if q == 0 {
        let (rows, y) = lagged_rows(&w, &e, p, 0, p);
        (stats::lstsq(&rows, &y)?, Vec::new())
    } else {
        let long = (p + q + 1).max(20.min(n / 4));
        if n <= long + q + 1 {
            return Err(fail("series too short for the long autoregression"));
        }
        let (rows, y) = lagged_rows(&w, &e, long, 0, long);
        let ar = stats::lstsq(&rows, &y)?;
        for t in long..n {
            let fit: f64 = (1..=long).map(|i| ar[i - 1] * w[t - i]).sum();
            e[t] = w[t] - fit;
        }
        let (rows, y) = lagged_rows(&w, &e, p, q, long + q);
        let coef = stats::lstsq(&rows, &y)?;
        (coef[..p].to_vec(), coef[p..].to_vec())
    };

    let mut path = w.clone();
    let mut shocks = e;
    for _ in 0..horizon {
        let t = path.len();
        let ar: f64 = phi.iter().enumerate().map(|(i, c)| c * path[t - 1 - i]).sum();
        let ma: f64 = theta.iter().enumerate().map(|(j, c)| c * shocks[t - 1 - j]).sum();
        path.push(ar + ma);
        shocks.push(0.0);
    }
    let mut out: Vec<f64> = path[n..].iter().map(|v| v + mu).collect();

    // integrate back up through each differencing level
    for level in levels[..d].iter().rev() {
        let mut last = *level.last().unwrap();
        for v in out.iter_mut() {
            last += *v;
            *v = last;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite forecast"));
    }
    Ok(out)
}
