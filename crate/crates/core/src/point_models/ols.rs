use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Relative pivot size below which the Gram matrix is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;
/// Ridge scale applied to `trace(XᵀX) / p` when the design is rank deficient.
const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Ridge term added to the normal equations, if the design was singular.
    pub ridge: Option<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Least squares via the normal equations and a Cholesky factorization.
///
/// With an intercept the columns are centered first, which leaves the
/// solution unchanged and drops the intercept column from the Gram matrix.
pub fn fit(rows: &FeatureMatrix, fit_intercept: bool) -> Result<LinearModel> {
    let p = rows.arity();
    let n = rows.len();
    let y = rows.targets();

    let (x_mean, y_mean) = if fit_intercept {
        let mut m = vec![0.0; p];
        for row in rows.rows() {
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        m.iter_mut().for_each(|v| *v /= n as f64);
        (m, y.iter().sum::<f64>() / n as f64)
    } else {
        (vec![0.0; p], 0.0)
    };

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut centered = vec![0.0; p];
    for (row, &target) in rows.rows().zip(y) {
        for (c, (x, m)) in centered.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = x - m;
        }
        let t = target - y_mean;
        for a in 0..p {
            rhs[a] += centered[a] * t;
            for b in 0..=a {
                gram[a * p + b] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[b * p + a] = gram[a * p + b];
        }
    }

    let (coefficients, ridge) = match cholesky_solve(&gram, &rhs, p) {
        Some(beta) => (beta, None),
        None => {
            let trace: f64 = (0..p).map(|a| gram[a * p + a]).sum();
            let lambda = RIDGE_SCALE * (trace / p as f64).max(f64::MIN_POSITIVE);
            log::warn!("rank-deficient design; adding ridge term {lambda:e}");
            let mut ridged = gram.clone();
            for a in 0..p {
                ridged[a * p + a] += lambda;
            }
            let beta = cholesky_solve(&ridged, &rhs, p).ok_or_else(|| {
                Error::InvalidArgument("normal equations singular even with ridge".into())
            })?;
            (beta, Some(lambda))
        }
    };
    let intercept = if fit_intercept {
        y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>()
    } else {
        0.0
    };
    Ok(LinearModel {
        coefficients,
        intercept,
        ridge,
    })
}

/// Solve `A x = b` for symmetric positive definite `A`; `None` if a pivot collapses.
fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let max_diag = (0..p).map(|k| a[k * p + k]).fold(0.0_f64, f64::max);
    if p > 0 && max_diag <= 0.0 {
        return None;
    }
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if d <= PIVOT_TOLERANCE * max_diag {
            return None;
        }
        let d = d.sqrt();
        l[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / d;
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i * p + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k * p + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * p + i];
    }
    Some(x)
}
