use std::io::Write;

use super::IntervalForecast;
use crate::error::{Error, Result};

/// Column suffix for a confidence level: α = 0.10 gives `90`, α = 0.025 gives `97.5`.
pub fn level_label(alpha: f64) -> String {
    let level = 100.0 * (1.0 - alpha);
    let rounded = level.round();
    if (level - rounded).abs() < 1e-9 {
        format!("{rounded:.0}")
    } else {
        let s = format!("{level:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

/// Write forecasts as `day,interval,point,lo85,hi85,...`.
///
/// `day` is the caller's label for each forecast (for example the 1-based
/// test-day number) and `interval` runs 1..=96.
pub fn write_forecast_csv<W: Write>(
    forecasts: &[(usize, &IntervalForecast)],
    writer: W,
) -> Result<()> {
    let Some((_, first)) = forecasts.first() else {
        return Err(Error::Empty("no forecasts to write".into()));
    };
    let alphas: Vec<f64> = first.bands.iter().map(|b| b.alpha).collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["day".to_owned(), "interval".to_owned(), "point".to_owned()];
    for &a in &alphas {
        let level = level_label(a);
        header.push(format!("lo{level}"));
        header.push(format!("hi{level}"));
    }
    w.write_record(&header)?;
    for (label, f) in forecasts {
        if f.bands.len() != alphas.len() {
            return Err(Error::InvalidArgument("forecasts carry different levels".into()));
        }
        for slot in 0..f.point.len() {
            let mut record = vec![label.to_string(), (slot + 1).to_string(), f.point[slot].to_string()];
            for band in &f.bands {
                record.push(band.lower[slot].to_string());
                record.push(band.upper[slot].to_string());
            }
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| Error::io("<forecast csv>", e))?;
    Ok(())
}
