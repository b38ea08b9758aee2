use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard point-forecast error measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Mean absolute percentage error in percent, over rows with non-zero target.
    pub mape: f64,
    /// Rows left out of the MAPE because the target was zero.
    pub mape_skipped: usize,
    pub r2: f64,
    pub rmsle: f64,
}

pub fn point_metrics(y: &[f64], yhat: &[f64]) -> Result<PointMetrics> {
    if y.len() != yhat.len() {
        return Err(Error::InvalidArgument(format!(
            "{} observations vs {} predictions",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    if y.iter().chain(yhat).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric inputs".into()));
    }
    if y.iter().chain(yhat).any(|&v| v <= -1.0) {
        return Err(Error::InvalidArgument("RMSLE needs values above -1".into()));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut abs = 0.0;
    let mut sse = 0.0;
    let mut pct = 0.0;
    let mut pct_rows = 0usize;
    let mut log_sq = 0.0;
    for (&a, &b) in y.iter().zip(yhat) {
        let e = a - b;
        abs += e.abs();
        sse += e * e;
        if a != 0.0 {
            pct += (e / a).abs();
            pct_rows += 1;
        }
        log_sq += (b.ln_1p() - a.ln_1p()).powi(2);
    }
    let mse = sse / n;
    Ok(PointMetrics {
        mae: abs / n,
        mse,
        rmse: mse.sqrt(),
        mape: if pct_rows == 0 { f64::NAN } else { 100.0 * pct / pct_rows as f64 },
        mape_skipped: y.len() - pct_rows,
        r2: 1.0 - sse / sst,
        rmsle: (log_sq / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast() {
        let y = [1.0, 2.0, 5.0];
        let m = point_metrics(&y, &y).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse, m.mape, m.r2, m.rmsle), (0.0, 0.0, 0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn mean_forecast_has_zero_r2() {
        let y = [1.0, 2.0, 6.0];
        let m = point_metrics(&y, &[3.0; 3]).unwrap();
        assert!(m.r2.abs() < 1e-15);
    }

    #[test]
    fn hand_worked_example() {
        let m = point_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.mse - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m.mape - (100.0 + 0.0 + 100.0 / 3.0) / 3.0).abs() < 1e-12);
        let rmsle = (((3.0f64.ln() - 2.0f64.ln()).powi(2) + (3.0f64.ln() - 4.0f64.ln()).powi(2)) / 3.0).sqrt();
        assert!((m.rmsle - rmsle).abs() < 1e-15);
    }

    #[test]
    fn zero_targets_are_skipped_in_mape() {
        let m = point_metrics(&[0.0, 2.0, 4.0], &[1.0, 1.0, 4.0]).unwrap();
        assert_eq!(m.mape_skipped, 1);
        assert!((m.mape - 25.0).abs() < 1e-12);
    }

    #[test]
    fn constant_observations_have_no_r2() {
        assert!(matches!(point_metrics(&[2.0; 4], &[1.0; 4]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(point_metrics(&[1.0, 2.0], &[1.0]).is_err());
        assert!(point_metrics(&[], &[]).is_err());
    }
}
