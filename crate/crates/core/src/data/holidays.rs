use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use crate::error::{Error, Result};

/// Dates treated as non-working days for the holiday feature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HolidaySet {
    dates: BTreeSet<NaiveDate>,
}

impl HolidaySet {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self {
            dates: dates.into_iter().collect(),
        }
    }

    /// US federal holidays (observed dates) for every year in `years`.
    pub fn us_federal(years: std::ops::RangeInclusive<i32>) -> Self {
        let mut dates = BTreeSet::new();
        for y in years {
            let fixed = |m, d| observed(NaiveDate::from_ymd_opt(y, m, d).expect("valid date"));
            dates.insert(fixed(1, 1));
            dates.insert(nth_weekday(y, 1, Weekday::Mon, 3));
            dates.insert(nth_weekday(y, 2, Weekday::Mon, 3));
            dates.insert(last_weekday(y, 5, Weekday::Mon));
            if y >= 2021 {
                dates.insert(fixed(6, 19));
            }
            dates.insert(fixed(7, 4));
            dates.insert(nth_weekday(y, 9, Weekday::Mon, 1));
            dates.insert(nth_weekday(y, 10, Weekday::Mon, 2));
            dates.insert(fixed(11, 11));
            dates.insert(nth_weekday(y, 11, Weekday::Thu, 4));
            dates.insert(fixed(12, 25));
        }
        Self { dates }
    }

    /// One ISO date per line; blank lines and `#` comments are ignored.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut dates = BTreeSet::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io("<holiday list>", e))?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let date = NaiveDate::parse_from_str(body, "%Y-%m-%d").map_err(|_| Error::MalformedRow {
                line: n as u64 + 1,
                message: format!("not an ISO date: {body:?}"),
            })?;
            dates.insert(date);
        }
        Ok(Self { dates })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    /// Weekend or listed holiday.
    pub fn is_off_day(&self, date: NaiveDate) -> bool {
        matches!(date.weekday(), Weekday::Sat | Weekday::Sun) || self.contains(date)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

fn observed(date: NaiveDate) -> NaiveDate {
    match date.weekday() {
        Weekday::Sat => date - Duration::days(1),
        Weekday::Sun => date + Duration::days(1),
        _ => date,
    }
}

fn nth_weekday(year: i32, month: u32, weekday: Weekday, n: u8) -> NaiveDate {
    NaiveDate::from_weekday_of_month_opt(year, month, weekday, n).expect("valid weekday of month")
}

fn last_weekday(year: i32, month: u32, weekday: Weekday) -> NaiveDate {
    let next_month = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid date");
    let mut d = next_month - Duration::days(1);
    while d.weekday() != weekday {
        d -= Duration::days(1);
    }
    d
}
