//! Demand series ingestion, day vectors and the supervised feature matrix.

mod acf;
mod features;
mod holidays;
mod ingest;

use std::ops::Range;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use acf::{acf_pacf, Correlogram};
pub use features::{build_features, quarter_code, FeatureMatrix, FeatureRow, FEATURE_COUNT};
pub use holidays::HolidaySet;
pub use ingest::{
    aggregate_sites, parse_demand_csv, parse_site_csv, write_demand_csv, ColumnSchema,
    ParseOptions,
};

/// Fifteen-minute intervals in one calendar day.
pub const INTERVALS_PER_DAY: usize = 96;
/// Minutes between consecutive instants.
pub const INTERVAL_MINUTES: i64 = 15;

/// Whole-day, 15-minute demand series with aligned temperature.
///
/// Instant `k` is `start + 15 min * k`; `start` is always midnight, and the
/// length is always a multiple of 96, so day `j` is the slice
/// `[96 j, 96 (j + 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    start: NaiveDate,
    demand: Vec<f64>,
    temperature: Vec<f64>,
    site_count: usize,
}

impl DemandSeries {
    pub fn new(
        start: NaiveDate,
        demand: Vec<f64>,
        temperature: Vec<f64>,
        site_count: usize,
    ) -> Result<Self> {
        if demand.len() != temperature.len() {
            return Err(Error::InvalidArgument(format!(
                "demand has {} values but temperature has {}",
                demand.len(),
                temperature.len()
            )));
        }
        if demand.is_empty() {
            return Err(Error::Empty("demand series".into()));
        }
        if !demand.len().is_multiple_of(INTERVALS_PER_DAY) {
            let last = start + Duration::days((demand.len() / INTERVALS_PER_DAY) as i64);
            return Err(Error::PartialDay(last.to_string()));
        }
        if site_count == 0 {
            return Err(Error::InvalidArgument("site_count must be positive".into()));
        }
        if let Some(k) = demand.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "demand {} at {} must be finite and non-negative",
                demand[k],
                instant(start, k)
            )));
        }
        if let Some(k) = temperature.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "temperature at {} is not finite",
                instant(start, k)
            )));
        }
        Ok(Self {
            start,
            demand,
            temperature,
            site_count,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn temperature(&self) -> &[f64] {
        &self.temperature
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn day_count(&self) -> usize {
        self.demand.len() / INTERVALS_PER_DAY
    }

    pub fn date_of(&self, day: usize) -> NaiveDate {
        self.start + Duration::days(day as i64)
    }

    pub fn timestamp(&self, k: usize) -> NaiveDateTime {
        instant(self.start, k)
    }

    /// Day index of `date`, if the series covers it.
    pub fn day_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.day_count()).then_some(offset as usize)
    }

    pub fn day_demand(&self, day: usize) -> Result<&[f64]> {
        self.day_range(day).map(|r| &self.demand[r])
    }

    pub fn day_temperature(&self, day: usize) -> Result<&[f64]> {
        self.day_range(day).map(|r| &self.temperature[r])
    }

    /// Demand of day `j` as a [`DayVector`].
    pub fn day_vector(&self, day: usize) -> Result<DayVector> {
        Ok(DayVector {
            day,
            values: self.day_demand(day)?.to_vec(),
        })
    }

    pub fn day_vectors(&self, days: Range<usize>) -> Result<Vec<DayVector>> {
        days.map(|d| self.day_vector(d)).collect()
    }

    /// Copy with the demand of every day in `days` replaced by `f(day, slot, value)`.
    pub fn map_demand(
        &self,
        days: Range<usize>,
        mut f: impl FnMut(usize, usize, f64) -> f64,
    ) -> Result<Self> {
        let mut demand = self.demand.clone();
        for day in days {
            let r = self.day_range(day)?;
            for (slot, v) in demand[r].iter_mut().enumerate() {
                *v = f(day, slot, *v);
            }
        }
        Self::new(self.start, demand, self.temperature.clone(), self.site_count)
    }

    fn day_range(&self, day: usize) -> Result<Range<usize>> {
        if day >= self.day_count() {
            return Err(Error::PartialDay(self.date_of(day).to_string()));
        }
        Ok(day * INTERVALS_PER_DAY..(day + 1) * INTERVALS_PER_DAY)
    }
}

fn instant(start: NaiveDate, k: usize) -> NaiveDateTime {
    start.and_hms_opt(0, 0, 0).expect("midnight") + Duration::minutes(INTERVAL_MINUTES * k as i64)
}

/// One day's 96 values (demand or residuals), slot 0 = 00:00, slot 95 = 23:45.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayVector {
    pub day: usize,
    pub values: Vec<f64>,
}

impl DayVector {
    pub fn new(day: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != INTERVALS_PER_DAY {
            return Err(Error::InvalidArgument(format!(
                "day vector needs {INTERVALS_PER_DAY} values, got {}",
                values.len()
            )));
        }
        Ok(Self { day, values })
    }
}

/// Contiguous training and test day ranges split at a boundary date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    pub boundary: NaiveDate,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

impl TrainTestSplit {
    /// Train on every day before `boundary`, test on `test_days` days from it
    /// (or to the end of the series).
    pub fn at(series: &DemandSeries, boundary: NaiveDate, test_days: Option<usize>) -> Result<Self> {
        let b = series.day_of(boundary).ok_or_else(|| {
            Error::InsufficientHistory(format!(
                "split boundary {boundary} outside series {}..{}",
                series.start(),
                series.date_of(series.day_count())
            ))
        })?;
        if b == 0 {
            return Err(Error::InsufficientHistory(format!(
                "no training days before {boundary}"
            )));
        }
        let end = match test_days {
            Some(n) if b + n > series.day_count() => {
                return Err(Error::InsufficientHistory(format!(
                    "series ends before {n} test days from {boundary}"
                )))
            }
            Some(0) => return Err(Error::InvalidArgument("empty test range".into())),
            Some(n) => b + n,
            None => series.day_count(),
        };
        Ok(Self {
            boundary,
            train: 0..b,
            test: b..end,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(days: usize, c: f64) -> DemandSeries {
        let n = days * INTERVALS_PER_DAY;
        DemandSeries::new(
            NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            vec![c; n],
            vec![50.0; n],
            1,
        )
        .unwrap()
    }

    #[test]
    fn constant_series_gives_constant_day_vector() {
        let s = constant(3, 4.5);
        let v = s.day_vector(1).unwrap();
        assert_eq!(v.values, vec![4.5; 96]);
    }

    #[test]
    fn day_vector_aligns_with_midnight() {
        let n = 2 * INTERVALS_PER_DAY;
        let demand: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let s = DemandSeries::new(
            NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(),
            demand.clone(),
            vec![0.0; n],
            1,
        )
        .unwrap();
        let v = s.day_vector(1).unwrap();
        assert_eq!(v.values[0], demand[96]);
        assert_eq!(s.timestamp(96).to_string(), "2021-03-02 00:00:00");
        let joined: Vec<f64> = (0..2).flat_map(|d| s.day_vector(d).unwrap().values).collect();
        assert_eq!(joined, demand);
    }

    #[test]
    fn day_past_end_is_partial() {
        let s = constant(2, 1.0);
        assert!(matches!(s.day_vector(2), Err(Error::PartialDay(_))));
    }

    #[test]
    fn rejects_negative_demand() {
        let mut d = vec![1.0; 96];
        d[5] = -0.5;
        let r = DemandSeries::new(NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), d, vec![0.0; 96], 1);
        assert!(matches!(r, Err(Error::InvalidValue(_))));
    }

    #[test]
    fn split_is_contiguous() {
        let s = constant(10, 1.0);
        let split = TrainTestSplit::at(&s, NaiveDate::from_ymd_opt(2021, 1, 8).unwrap(), None).unwrap();
        assert_eq!(split.train, 0..7);
        assert_eq!(split.test, 7..10);
        assert!(TrainTestSplit::at(&s, s.start(), None).is_err());
        let short = TrainTestSplit::at(&s, NaiveDate::from_ymd_opt(2021, 1, 8).unwrap(), Some(2)).unwrap();
        assert_eq!(short.test, 7..9);
    }
}
