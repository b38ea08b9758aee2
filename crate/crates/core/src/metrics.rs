//! Interval scores: Winkler score and coverage probability, per point and
//! averaged per day then over days.

use serde::{Deserialize, Serialize};

use crate::bootstrap::IntervalForecast;
use crate::data::DayVector;
use crate::error::{Error, Result};

fn check_bounds(lower: f64, upper: f64) -> Result<()> {
    if lower > upper {
        return Err(Error::InvalidArgument(format!(
            "lower bound {lower} above upper bound {upper}"
        )));
    }
    Ok(())
}

/// Interval width plus `(1/α)` times the distance by which `y` falls outside.
pub fn winkler_point(y: f64, lower: f64, upper: f64, alpha: f64) -> Result<f64> {
    check_bounds(lower, upper)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let width = upper - lower;
    Ok(if y < lower {
        width + (lower - y) / alpha
    } else if y > upper {
        width + (y - upper) / alpha
    } else {
        width
    })
}

/// 1 when `lower ≤ y ≤ upper` (both ends inclusive), else 0.
pub fn coverage_point(y: f64, lower: f64, upper: f64) -> Result<u8> {
    check_bounds(lower, upper)?;
    Ok(u8::from(lower <= y && y <= upper))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalScoreReport {
    pub alpha: f64,
    /// Mean Winkler score (kW).
    pub ws: f64,
    /// Coverage fraction in [0, 1].
    pub cp: f64,
    /// Mean interval width; `ws = mean_width + mean_penalty`.
    pub mean_width: f64,
    /// Mean `(1/α)`-scaled violation.
    pub mean_penalty: f64,
    pub per_day_ws: Vec<f64>,
    pub per_day_cp: Vec<f64>,
}

/// Winkler score and coverage for one level, averaged over each day's
/// intervals and then over days.
pub fn aggregate_scores(
    forecasts: &[IntervalForecast],
    observed: &[DayVector],
    alpha: f64,
) -> Result<IntervalScoreReport> {
    if forecasts.len() != observed.len() {
        return Err(Error::InvalidArgument(format!(
            "{} forecasts for {} observed days",
            forecasts.len(),
            observed.len()
        )));
    }
    if forecasts.is_empty() {
        return Err(Error::Empty("no days to score".into()));
    }
    let mut per_day_ws = Vec::with_capacity(forecasts.len());
    let mut per_day_cp = Vec::with_capacity(forecasts.len());
    let mut width_total = 0.0;
    let mut penalty_total = 0.0;
    for (f, y) in forecasts.iter().zip(observed) {
        if f.day != y.day {
            return Err(Error::InvalidArgument(format!(
                "forecast for day {} paired with observations of day {}",
                f.day, y.day
            )));
        }
        let band = f.band(alpha).ok_or_else(|| {
            Error::InvalidArgument(format!("day {} has no band for alpha {alpha}", f.day))
        })?;
        let n = y.values.len();
        if band.lower.len() != n || band.upper.len() != n || n == 0 {
            return Err(Error::InvalidArgument(format!("day {} interval count mismatch", f.day)));
        }
        let (mut ws, mut cp, mut width) = (0.0, 0.0, 0.0);
        for ((&obs, &lo), &hi) in y.values.iter().zip(&band.lower).zip(&band.upper) {
            ws += winkler_point(obs, lo, hi, alpha)?;
            cp += f64::from(coverage_point(obs, lo, hi)?);
            width += hi - lo;
        }
        let n = n as f64;
        per_day_ws.push(ws / n);
        per_day_cp.push(cp / n);
        width_total += width / n;
        penalty_total += (ws - width) / n;
    }
    let days = forecasts.len() as f64;
    Ok(IntervalScoreReport {
        alpha,
        ws: per_day_ws.iter().sum::<f64>() / days,
        cp: per_day_cp.iter().sum::<f64>() / days,
        mean_width: width_total / days,
        mean_penalty: penalty_total / days,
        per_day_ws,
        per_day_cp,
    })
}
