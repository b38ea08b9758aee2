use std::time::{Duration, Instant};

use crate::bootstrap::{
    bagging_forecast, block_bootstrap_forecast_day, cbb_forecast_day, ClusteredMemory,
    IntervalForecast, ResidualMemory,
};
use crate::data::{build_features, DayVector, DemandSeries, HolidaySet, TrainTestSplit};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_scores, IntervalScoreReport};
use crate::point_models::{fit, residual_matrix, FittedModel};

use super::{Method, RunConfig};

/// Everything a backtest produces.
#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub method: Method,
    pub model_label: &'static str,
    pub split: TrainTestSplit,
    pub forecasts: Vec<IntervalForecast>,
    pub observed: Vec<DayVector>,
    pub scores: Vec<IntervalScoreReport>,
    /// Wall-clock seconds spent fitting models and building intervals.
    pub train_seconds: f64,
    pub refits: usize,
    pub memory_updates: usize,
    pub model: FittedModel,
    pub memory: ClusteredMemory,
}

struct Stopwatch(Duration);

impl Stopwatch {
    fn time<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0 += t.elapsed();
        out
    }
}

/// Expanding-window backtest.
///
/// For each test day in order: forecast intervals with the current model and
/// memory, observe the day, append its rows to the training set and refit,
/// overwrite the calendar-aligned memory day with the new residuals, and
/// recluster at the configured cadence. Forecasts for a day only read demand
/// from earlier days.
///
/// Bagging fits its replicates once on the initial training window and
/// predicts the whole horizon from them; refitting a thousand replicates per
/// day is what the cheaper methods are meant to avoid.
pub fn run_expanding_window(
    series: &DemandSeries,
    holidays: &HolidaySet,
    config: &RunConfig,
) -> Result<BacktestOutput> {
    config.validate()?;
    let boundary = config
        .split
        .ok_or_else(|| Error::Config("no split date configured".into()))?;
    let split = TrainTestSplit::at(series, boundary, config.test_days)?;
    let settings = config.bootstrap_settings();
    let spec = config.model;
    let mut clock = Stopwatch(Duration::ZERO);

    // Day 0 has no previous day for the lag features.
    let train_days = 1..split.train.end;
    if train_days.is_empty() {
        return Err(Error::InsufficientHistory("training window needs at least 2 days".into()));
    }
    let mut train_rows = build_features(series, train_days.clone(), holidays)?;
    let mut model = clock.time(|| fit(&spec, &train_rows))?;
    let residuals = residual_matrix(&model, &train_rows)?;
    let memory = ResidualMemory::from_residuals(residuals, config.block_length)?;
    let demand = series.day_vectors(train_days)?;
    // Plain block bootstrap keeps a single-cluster memory so that memory
    // updates follow the same path as the clustered method.
    let clusters = match config.method {
        Method::Cbb => config.clusters,
        Method::BlockBb | Method::Bagging => 1,
    };
    let mut memory = clock.time(|| {
        ClusteredMemory::build(memory, demand, clusters, config.seed, series.start())
    })?;

    let bagged = match config.method {
        Method::Bagging => {
            let test_rows = build_features(series, split.test.clone(), holidays)?;
            let initial = train_rows.clone();
            let out = clock.time(|| {
                bagging_forecast(&initial, &spec, memory.memory(), &test_rows, &settings)
            })?;
            Some(out)
        }
        _ => None,
    };

    let mut forecasts = Vec::with_capacity(split.test.len());
    let mut observed = Vec::with_capacity(split.test.len());
    let mut refits = 0;
    let mut memory_updates = 0;
    for (t, day) in split.test.clone().enumerate() {
        let rows = build_features(series, day..day + 1, holidays).map_err(Error::stage(day, "features"))?;
        let point = DayVector {
            day,
            values: model.predict(&rows).map_err(Error::stage(day, "predict"))?,
        };
        let forecast = match (&bagged, config.method) {
            (Some(b), _) => Ok(b[t].clone()),
            (None, Method::Cbb) => clock.time(|| cbb_forecast_day(&point, &memory, &settings)),
            (None, _) => clock.time(|| block_bootstrap_forecast_day(&point, memory.memory(), &settings)),
        }
        .map_err(Error::stage(day, "forecast"))?;
        forecasts.push(forecast);

        let actual = series.day_vector(day)?;
        let z: Vec<f64> = actual.values.iter().zip(&point.values).map(|(y, p)| y - p).collect();

        train_rows.extend(&rows)?;
        if (t + 1) % config.refit_every == 0 {
            model = clock
                .time(|| fit(&spec, &train_rows))
                .map_err(Error::stage(day, "refit"))?;
            refits += 1;
        }
        let recluster = config.method == Method::Cbb
            && config.recluster_every > 0
            && (t + 1) % config.recluster_every == 0;
        clock
            .time(|| memory.update_memory(day, &z, &actual.values, recluster))
            .map_err(Error::stage(day, "memory update"))?;
        memory_updates += 1;
        observed.push(actual);
    }

    let scores = config
        .alphas
        .iter()
        .map(|&a| aggregate_scores(&forecasts, &observed, a))
        .collect::<Result<Vec<_>>>()?;

    Ok(BacktestOutput {
        method: config.method,
        model_label: spec.label(),
        split,
        forecasts,
        observed,
        scores,
        train_seconds: clock.0.as_secs_f64(),
        refits,
        memory_updates,
        model,
        memory,
    })
}
