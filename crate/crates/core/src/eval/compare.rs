use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{run_expanding_window, BacktestOutput, RunConfig};
use crate::bootstrap::{level_label, write_forecast_csv};
use crate::data::{DemandSeries, HolidaySet};
use crate::error::{Error, Result};

/// One (method, model, alpha) row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub model: String,
    pub alpha: f64,
    pub ws: f64,
    pub cp: f64,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ComparisonResult {
    pub rows: Vec<ComparisonRow>,
    pub runs: Vec<BacktestOutput>,
}

pub fn score_rows(run: &BacktestOutput) -> Vec<ComparisonRow> {
    run.scores
        .iter()
        .map(|s| ComparisonRow {
            method: run.method.label().to_owned(),
            model: run.model_label.to_owned(),
            alpha: s.alpha,
            ws: s.ws,
            cp: s.cp,
            train_seconds: run.train_seconds,
        })
        .collect()
}

/// Run every config on the same data and split and collect their scores.
pub fn compare_methods(
    series: &DemandSeries,
    holidays: &HolidaySet,
    configs: &[RunConfig],
) -> Result<ComparisonResult> {
    let Some(first) = configs.first() else {
        return Err(Error::Config("no configurations to compare".into()));
    };
    if configs
        .iter()
        .any(|c| c.split != first.split || c.test_days != first.test_days)
    {
        return Err(Error::Config("configurations use different train/test splits".into()));
    }
    let mut result = ComparisonResult::default();
    for config in configs {
        let run = run_expanding_window(series, holidays, config)?;
        log::info!(
            "{} / {}: {:.2}s",
            run.method,
            run.model_label,
            run.train_seconds
        );
        result.rows.extend(score_rows(&run));
        result.runs.push(run);
    }
    Ok(result)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// `method,model,alpha,ws,cp,train_seconds` rows.
pub fn write_score_rows<W: Write>(rows: &[ComparisonRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["method", "model", "alpha", "ws", "cp", "train_seconds"])?;
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))?;
    Ok(())
}

/// Write `forecasts/day_<n>.csv` (n counting test days from 1), `scores.csv`,
/// and JSON snapshots of the final model and memory under `dir`.
pub fn write_backtest(run: &BacktestOutput, dir: &Path) -> Result<()> {
    for (k, f) in run.forecasts.iter().enumerate() {
        let path = dir.join("forecasts").join(format!("day_{}.csv", k + 1));
        write_forecast_csv(&[(k + 1, f)], create(&path)?)?;
    }
    write_score_rows(&score_rows(run), create(&dir.join("scores.csv"))?)?;
    run.model.save_json(create(&dir.join("model.json"))?)?;
    run.memory.save_json(create(&dir.join("memory.json"))?)?;
    run.memory.clustering().save_json(create(&dir.join("clustering.json"))?)?;
    Ok(())
}

/// Write `comparison.csv` plus one `cp_vs_ws_<level>.csv` per confidence level.
pub fn write_comparison(result: &ComparisonResult, dir: &Path) -> Result<()> {
    write_score_rows(&result.rows, create(&dir.join("comparison.csv"))?)?;
    let mut alphas: Vec<f64> = result.rows.iter().map(|r| r.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    for alpha in alphas {
        let path = dir.join(format!("cp_vs_ws_{}.csv", level_label(alpha)));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["method", "model", "ws", "cp"])?;
        for r in result.rows.iter().filter(|r| r.alpha == alpha) {
            w.write_record([r.method.clone(), r.model.clone(), r.ws.to_string(), r.cp.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// `k,wss` rows.
pub fn write_elbow<W: Write>(scan: &[(usize, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "wss"])?;
    for (k, wss) in scan {
        w.write_record([k.to_string(), wss.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<elbow csv>", e))?;
    Ok(())
}
