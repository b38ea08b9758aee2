use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{DemandSeries, HolidaySet, INTERVALS_PER_DAY};
use crate::error::{Error, Result};

/// Inputs per row: two previous-day lags, temperature, quarter, holiday flag.
pub const FEATURE_COUNT: usize = 5;

/// Calendar quarter code: Jan–Mar 0, Apr–Jun 1, Jul–Sep 2, Oct–Dec 3.
pub fn quarter_code(date: NaiveDate) -> u8 {
    (date.month0() / 3) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub day: usize,
    /// Zero-based interval within the day (0 = 00:00).
    pub slot: usize,
    pub features: [f64; FEATURE_COUNT],
    pub target: f64,
}

/// Row-major design matrix with targets and (day, slot) labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrix {
    arity: usize,
    values: Vec<f64>,
    targets: Vec<f64>,
    labels: Vec<(usize, usize)>,
}

impl FeatureMatrix {
    pub fn new(arity: usize) -> Self {
        Self {
            arity,
            ..Default::default()
        }
    }

    /// Build from explicit rows; every row must have `arity` values.
    pub fn from_rows(arity: usize, rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let mut m = Self::new(arity);
        for (k, (row, &y)) in rows.iter().zip(targets).enumerate() {
            m.push(row, y, (k / INTERVALS_PER_DAY, k % INTERVALS_PER_DAY))?;
        }
        Ok(m)
    }

    pub fn push(&mut self, row: &[f64], target: f64, label: (usize, usize)) -> Result<()> {
        if row.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: row.len(),
            });
        }
        self.values.extend_from_slice(row);
        self.targets.push(target);
        self.labels.push(label);
        Ok(())
    }

    /// Append every row of `other`.
    pub fn extend(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.arity != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        self.values.extend_from_slice(&other.values);
        self.targets.extend_from_slice(&other.targets);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.arity..(k + 1) * self.arity]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(|k| self.row(k))
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    /// Same design, different targets.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} targets for {} rows",
                targets.len(),
                self.len()
            )));
        }
        Ok(Self {
            targets,
            ..self.clone()
        })
    }

    /// Rows labelled with `day`, assuming rows are grouped by day.
    pub fn day_rows(&self, day: usize) -> Range<usize> {
        let start = self.labels.partition_point(|&(d, _)| d < day);
        let end = self.labels.partition_point(|&(d, _)| d <= day);
        start..end
    }

    pub fn feature_rows(&self) -> Vec<FeatureRow> {
        assert_eq!(self.arity, FEATURE_COUNT, "feature rows need the standard arity");
        (0..self.len())
            .map(|k| {
                let mut features = [0.0; FEATURE_COUNT];
                features.copy_from_slice(self.row(k));
                FeatureRow {
                    day: self.labels[k].0,
                    slot: self.labels[k].1,
                    features,
                    target: self.targets[k],
                }
            })
            .collect()
    }
}

/// One row per (slot, day) for every day in `days`.
///
/// Lags come from the previous day and wrap within it: slot 0 uses slots 95
/// and 94 of day `j - 1`, slot 1 uses slots 0 and 95.
pub fn build_features(
    series: &DemandSeries,
    days: Range<usize>,
    holidays: &HolidaySet,
) -> Result<FeatureMatrix> {
    if days.start == 0 {
        return Err(Error::InsufficientHistory(format!(
            "day {} has no previous day for lag features",
            series.date_of(0)
        )));
    }
    let mut m = FeatureMatrix::new(FEATURE_COUNT);
    m.values.reserve(days.len() * INTERVALS_PER_DAY * FEATURE_COUNT);
    for day in days {
        let prev = series.day_demand(day - 1)?;
        let today = series.day_demand(day)?;
        let temp = series.day_temperature(day)?;
        let date = series.date_of(day);
        let quarter = f64::from(quarter_code(date));
        let off = if holidays.is_off_day(date) { 1.0 } else { 0.0 };
        for slot in 0..INTERVALS_PER_DAY {
            let lag1 = prev[(slot + INTERVALS_PER_DAY - 1) % INTERVALS_PER_DAY];
            let lag2 = prev[(slot + INTERVALS_PER_DAY - 2) % INTERVALS_PER_DAY];
            m.push(&[lag1, lag2, temp[slot], quarter, off], today[slot], (day, slot))?;
        }
    }
    Ok(m)
}
