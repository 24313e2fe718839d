//! Small numeric helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Linear-interpolation quantile on already sorted data (`p` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(values), p)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

pub fn std_dev(values: &[f64]) -> f64 {
    variance(values).sqrt()
}

/// Moment skewness; zero for a constant sample.
pub fn skewness(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = variance(values);
    if var <= 0.0 {
        return 0.0;
    }
    let m3 = values.iter().map(|v| (v - m).powi(3)).sum::<f64>() / values.len() as f64;
    m3 / var.powf(1.5)
}

/// Moment kurtosis minus 3; zero for a constant sample.
pub fn excess_kurtosis(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = variance(values);
    if var <= 0.0 {
        return 0.0;
    }
    let m4 = values.iter().map(|v| (v - m).powi(4)).sum::<f64>() / values.len() as f64;
    m4 / (var * var) - 3.0
}

/// Least-squares slope and intercept of `values` against 0..n.
pub fn linear_fit(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.len() < 2 {
        return (0.0, values.first().copied().unwrap_or(0.0));
    }
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = mean(values);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, y) in values.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (slope, y_mean - slope * t_mean)
}

/// Ordinary least squares with coefficient standard errors.
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Solve `y ~ X b` by QR and report classical standard errors.
pub fn ols(rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = rows.len();
    let k = rows.first().map(Vec::len).unwrap_or(0);
    if n <= k || k == 0 {
        return Err(Error::InsufficientLength {
            needed: k + 1,
            got: n,
        });
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular regression design".into()))?;
    let beta = &inv * x.transpose() * &yv;
    let resid = &yv - &x * &beta;
    let dof = (n - k) as f64;
    let sigma2 = resid.norm_squared() / dof;
    let std_errors = (0..k).map(|j| (sigma2 * inv[(j, j)]).sqrt()).collect();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        residuals: resid.iter().copied().collect(),
    })
}

/// Minimum-norm least squares via SVD; tolerates rank deficiency.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = rows.len();
    let k = rows.first().map(Vec::len).unwrap_or(0);
    if n == 0 || k == 0 {
        return Err(Error::EmptyInput);
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    // nalgebra's SVD occasionally returns factors that do not reproduce a
    // rank-deficient input; check and fall back to the Gram eigensystem.
    let exact = match (&svd.u, &svd.v_t) {
        (Some(u), Some(v_t)) => {
            let rebuilt = u * DMatrix::from_diagonal(&svd.singular_values) * v_t;
            (rebuilt - &x).abs().max() <= 1e-9 * max_sv.max(1.0)
        }
        _ => false,
    };
    if !exact {
        return gram_lstsq(&x, &yv);
    }
    let eps = max_sv * 1e-10 * n.max(k) as f64;
    let beta = svd
        .solve(&yv, eps)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(beta.iter().copied().collect())
}

/// Minimum-norm solution through the eigenvectors of `X'X`, dropping
/// directions with negligible eigenvalues.
fn gram_lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    let eig = (x.transpose() * x).symmetric_eigen();
    let xty = x.transpose() * y;
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = top * 1e-12 * x.ncols() as f64;
    let mut beta = DVector::zeros(x.ncols());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > tol {
            let v = eig.eigenvectors.column(i);
            beta += v * (v.dot(&xty) / lambda);
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Degenerate("least squares produced non-finite coefficients".into()));
    }
    Ok(beta.iter().copied().collect())
}

/// Solve the symmetric positive definite system `a x = b`.
pub fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Result<Vec<f64>> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Degenerate("matrix is not positive definite".into()))?;
    Ok(chol.solve(&b).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.25), 3.0);
        assert_eq!(quantile_sorted(&v, 0.75), 7.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile_sorted(&[4.0], 0.9), 4.0);
    }

    #[test]
    fn line_fit_is_exact() {
        let v: Vec<f64> = (0..10).map(|t| 3.0 + 2.0 * t as f64).collect();
        let (slope, icpt) = linear_fit(&v);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((icpt - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_coefficients() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| 1.0 + 0.5 * i as f64 + if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let fit = ols(&rows, &y).unwrap();
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-3);
        assert!(fit.std_errors[1] > 0.0);
    }

    #[test]
    fn lstsq_identical_centred_columns() {
        // three identical columns; nalgebra's SVD mis-factors this one
        let n = 97;
        let col: Vec<f64> = (0..n).map(|t| 2.0 * t as f64 - (n - 1) as f64).collect();
        let rows: Vec<Vec<f64>> = col.iter().map(|v| vec![*v; 3]).collect();
        let beta = lstsq(&rows, &col).unwrap();
        for b in beta {
            assert!((b - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lstsq_handles_collinear_columns() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64 - 1.0, 1.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let b = lstsq(&rows, &y).unwrap();
        for (r, t) in rows.iter().zip(&y) {
            let p: f64 = r.iter().zip(&b).map(|(a, c)| a * c).sum();
            assert!((p - t).abs() < 1e-8);
        }
    }
}
