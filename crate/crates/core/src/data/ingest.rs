use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use super::{DemandSeries, INTERVALS_PER_DAY, INTERVAL_MINUTES};
use crate::error::{Error, Result};

/// Longest run of missing instants the gap filler will interpolate over.
pub const MAX_FILLED_GAP: usize = 4;

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

/// Header names for the input columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub timestamp: String,
    pub demand: String,
    pub temperature: String,
    pub site_id: Option<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            demand: "demand_kw".into(),
            temperature: "temperature_f".into(),
            site_id: Some("site_id".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Linearly interpolate gaps of at most [`MAX_FILLED_GAP`] instants.
    pub fill_gaps: bool,
}

struct Row {
    line: u64,
    at: NaiveDateTime,
    demand: f64,
    temperature: f64,
}

struct Columns {
    timestamp: usize,
    demand: usize,
    temperature: usize,
    site: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, schema: &ColumnSchema) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let required = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.into()));
        Ok(Self {
            timestamp: required(&schema.timestamp)?,
            demand: required(&schema.demand)?,
            temperature: required(&schema.temperature)?,
            site: schema.site_id.as_deref().and_then(find),
        })
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

fn field<'a>(record: &'a csv::StringRecord, ix: usize, line: u64, name: &str) -> Result<&'a str> {
    record.get(ix).map(str::trim).ok_or_else(|| Error::MalformedRow {
        line,
        message: format!("missing field `{name}`"),
    })
}

fn number(raw: &str, line: u64, name: &str) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| Error::MalformedRow {
        line,
        message: format!("`{name}` value {raw:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow {
            line,
            message: format!("`{name}` value {raw:?} is not finite"),
        });
    }
    Ok(v)
}

fn read_rows<R: Read>(reader: R, schema: &ColumnSchema) -> Result<BTreeMap<String, Vec<Row>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, schema)?;
    let mut sites: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let ts = field(&record, cols.timestamp, line, &schema.timestamp)?;
        let at = parse_timestamp(ts).ok_or_else(|| Error::MalformedRow {
            line,
            message: format!("unparseable timestamp {ts:?}"),
        })?;
        let demand = number(field(&record, cols.demand, line, &schema.demand)?, line, &schema.demand)?;
        if demand < 0.0 {
            return Err(Error::MalformedRow {
                line,
                message: format!("negative demand {demand}"),
            });
        }
        let temperature = number(
            field(&record, cols.temperature, line, &schema.temperature)?,
            line,
            &schema.temperature,
        )?;
        let site = match cols.site {
            Some(ix) => field(&record, ix, line, "site_id")?.to_owned(),
            None => String::new(),
        };
        sites.entry(site).or_default().push(Row {
            line,
            at,
            demand,
            temperature,
        });
    }
    if sites.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }
    Ok(sites)
}

fn assemble(mut rows: Vec<Row>, options: ParseOptions) -> Result<DemandSeries> {
    rows.sort_by_key(|r| (r.at, r.line));
    if let Some(w) = rows.windows(2).find(|w| w[0].at == w[1].at) {
        return Err(Error::DuplicateTimestamp(w[0].at));
    }
    let first = &rows[0];
    if first.at.time() != NaiveTime::MIN {
        return Err(Error::PartialDay(first.at.date().to_string()));
    }
    let step = Duration::minutes(INTERVAL_MINUTES);
    let mut demand = vec![first.demand];
    let mut temperature = vec![first.temperature];
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let gap = b.at - a.at;
        let spacing = Error::Spacing {
            before: a.at,
            after: b.at,
        };
        if gap.num_seconds() % step.num_seconds() != 0 {
            return Err(spacing);
        }
        let missing = (gap.num_seconds() / step.num_seconds() - 1) as usize;
        if missing > 0 && !(options.fill_gaps && missing <= MAX_FILLED_GAP) {
            return Err(spacing);
        }
        for m in 1..=missing {
            let t = m as f64 / (missing + 1) as f64;
            demand.push(a.demand + t * (b.demand - a.demand));
            temperature.push(a.temperature + t * (b.temperature - a.temperature));
        }
        demand.push(b.demand);
        temperature.push(b.temperature);
    }
    if demand.len() % INTERVALS_PER_DAY != 0 {
        let last = rows.last().expect("non-empty");
        return Err(Error::PartialDay(last.at.date().to_string()));
    }
    DemandSeries::new(first.at.date(), demand, temperature, 1)
}

/// Parse a single-series demand CSV.
///
/// When the schema names a site column that is present, all rows must carry
/// the same site id; use [`parse_site_csv`] for multi-site files.
pub fn parse_demand_csv<R: Read>(
    reader: R,
    schema: &ColumnSchema,
    options: ParseOptions,
) -> Result<DemandSeries> {
    let sites = read_rows(reader, schema)?;
    if sites.len() > 1 {
        let ids: Vec<_> = sites.keys().cloned().collect();
        return Err(Error::InvalidValue(format!(
            "file holds {} sites ({}); parse it per site",
            ids.len(),
            ids.join(", ")
        )));
    }
    let rows = sites.into_values().next().expect("non-empty");
    assemble(rows, options)
}

/// Parse a CSV that may hold several sites, one series per distinct site id.
pub fn parse_site_csv<R: Read>(
    reader: R,
    schema: &ColumnSchema,
    options: ParseOptions,
) -> Result<Vec<(String, DemandSeries)>> {
    read_rows(reader, schema)?
        .into_iter()
        .map(|(site, rows)| Ok((site, assemble(rows, options)?)))
        .collect()
}

/// Sum demand across sites sharing one timestamp grid.
///
/// Temperature is averaged, weighted by each input's site count.
pub fn aggregate_sites(series: &[DemandSeries]) -> Result<DemandSeries> {
    let (first, rest) = series
        .split_first()
        .ok_or_else(|| Error::Empty("no series to aggregate".into()))?;
    if rest.is_empty() {
        return Ok(first.clone());
    }
    for s in rest {
        if s.start() != first.start() || s.len() != first.len() {
            return Err(Error::MismatchedGrid(format!(
                "{} x {} vs {} x {}",
                first.start(),
                first.len(),
                s.start(),
                s.len()
            )));
        }
    }
    let sites: usize = series.iter().map(DemandSeries::site_count).sum();
    let demand = (0..first.len())
        .map(|k| series.iter().map(|s| s.demand()[k]).sum())
        .collect();
    let temperature = (0..first.len())
        .map(|k| {
            series
                .iter()
                .map(|s| s.temperature()[k] * s.site_count() as f64)
                .sum::<f64>()
                / sites as f64
        })
        .collect();
    DemandSeries::new(first.start(), demand, temperature, sites)
}

/// Write a series back out in the default column layout.
pub fn write_demand_csv<W: Write>(series: &DemandSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "demand_kw", "temperature_f"])?;
    for k in 0..series.len() {
        w.write_record([
            series.timestamp(k).format("%Y-%m-%dT%H:%M:%S").to_string(),
            series.demand()[k].to_string(),
            series.temperature()[k].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
