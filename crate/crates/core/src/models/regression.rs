//! Autoregressions on lag features with recursive multi-step forecasting.

use nalgebra::{DMatrix, DVector};

use super::{ModelId, ModelSpec};
use crate::error::Result;
use crate::stats;

pub(super) struct Setup {
    kind: ModelId,
    num_lags: usize,
    degree: usize,
    lambda: f64,
}

impl Setup {
    pub(super) fn from_spec(spec: &ModelSpec) -> Self {
        Self {
            kind: spec.model_id,
            num_lags: spec.count("num_lags"),
            degree: if spec.model_id == ModelId::PolynomialRegression {
                spec.count("degree").max(1)
            } else {
                1
            },
            lambda: spec.real("lambda").unwrap_or(1.0),
        }
    }
}

/// Lags x[t-1..=t-L], then their powers 2..=degree.
fn features(history: &[f64], t: usize, setup: &Setup) -> Vec<f64> {
    let lags: Vec<f64> = (1..=setup.num_lags).map(|i| history[t - i]).collect();
    let mut row = lags.clone();
    for k in 2..=setup.degree {
        row.extend(lags.iter().map(|v| v.powi(k as i32)));
    }
    row
}

struct Linear {
    intercept: f64,
    coef: Vec<f64>,
}

impl Linear {
    fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows[0].len();
    (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}

fn centred(rows: &[Vec<f64>], means: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().zip(means).map(|(v, m)| v - m).collect())
        .collect()
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Coordinate descent on (1/2n)||y - Xb||^2 + lambda ||b||_1 over
/// standardised columns; returns coefficients on the original column scale.
fn lasso(xc: &[Vec<f64>], yc: &[f64], lambda: f64) -> Vec<f64> {
    let n = xc.len();
    let k = xc[0].len();
    let scale: Vec<f64> = (0..k)
        .map(|j| (xc.iter().map(|r| r[j] * r[j]).sum::<f64>() / n as f64).sqrt())
        .collect();
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            xc.iter()
                .map(|r| if scale[j] > 0.0 { r[j] / scale[j] } else { 0.0 })
                .collect()
        })
        .collect();
    let mut b = vec![0.0; k];
    let mut resid = yc.to_vec();
    for _ in 0..10_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            if scale[j] == 0.0 {
                continue;
            }
            let col = &cols[j];
            let rho: f64 = col.iter().zip(&resid).map(|(c, r)| c * r).sum::<f64>() / n as f64 + b[j];
            let next = soft_threshold(rho, lambda);
            let delta = next - b[j];
            if delta != 0.0 {
                resid.iter_mut().zip(col).for_each(|(r, c)| *r -= delta * c);
                b[j] = next;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < 1e-8 {
            break;
        }
    }
    b.iter()
        .zip(&scale)
        .map(|(v, s)| if *s > 0.0 { v / s } else { 0.0 })
        .collect()
}

fn fit(x: &[f64], setup: &Setup) -> Result<Linear> {
    let l = setup.num_lags;
    let rows: Vec<Vec<f64>> = (l..x.len()).map(|t| features(x, t, setup)).collect();
    let y: Vec<f64> = x[l..].to_vec();
    let means = column_means(&rows);
    let y_mean = stats::mean(&y);
    let xc = centred(&rows, &means);
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let coef = match setup.kind {
        ModelId::RidgeRegression => {
            let k = means.len();
            let xm = DMatrix::from_fn(xc.len(), k, |i, j| xc[i][j]);
            let a = xm.transpose() * &xm + DMatrix::identity(k, k) * setup.lambda;
            let rhs = xm.transpose() * DVector::from_column_slice(&yc);
            stats::solve_spd(a, rhs).or_else(|_| stats::lstsq(&xc, &yc))?
        }
        ModelId::LassoRegression => lasso(&xc, &yc, setup.lambda),
        _ => stats::lstsq(&xc, &yc)?,
    };
    let intercept = y_mean - coef.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    Ok(Linear { intercept, coef })
}

pub(super) fn forecast(x: &[f64], setup: &Setup, horizon: usize) -> Result<Vec<f64>> {
    let model = fit(x, setup)?;
    let mut history = x.to_vec();
    for _ in 0..horizon {
        let t = history.len();
        let next = model.predict(&features(&history, t, setup));
        history.push(next);
    }
    Ok(history.split_off(x.len()))
}
