use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{bounds_from_sorted, check_alpha};
use super::{BlockLength, ClusteredMemory, ResidualMemory};
use crate::cluster::nearest_cluster;
use crate::data::{DayVector, INTERVALS_PER_DAY};
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

/// Replicate count, confidence levels and master seed for one forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    /// Miscoverage levels; each yields a `100 (1 - α)%` interval.
    pub alphas: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            alphas: vec![0.15, 0.10, 0.05, 0.01],
            replicates: 1000,
            seed: 0,
        }
    }
}

impl BootstrapSettings {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 replicates, got {}",
                self.replicates
            )));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("no confidence levels requested".into()));
        }
        self.alphas.iter().try_for_each(|&a| check_alpha(a))
    }
}

/// Bounds of one confidence level over a day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub alpha: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Point forecast and bootstrap intervals for one test day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalForecast {
    pub day: usize,
    pub point: Vec<f64>,
    pub bands: Vec<Band>,
    pub replicates: usize,
    /// Memory cluster the residuals were drawn from, for cluster-based forecasts.
    pub cluster: Option<usize>,
}

impl IntervalForecast {
    pub fn band(&self, alpha: f64) -> Option<&Band> {
        self.bands.iter().find(|b| (b.alpha - alpha).abs() < 1e-12)
    }
}

/// Draw `replicates` residual trajectories for `day` from `pool`.
///
/// Every block position draws its own memory day, uniformly over `pool`, and
/// copies that day's block at the same position. Position `p`'s draws come
/// from the `(seed, day, p)` stream, replicate `r` being the stream's `r`-th
/// draw, so the result does not depend on how positions are scheduled.
pub fn sample_residual_paths(
    pool: &[&[f64]],
    block_length: BlockLength,
    replicates: usize,
    seed: u64,
    day: usize,
) -> Result<Vec<Vec<f64>>> {
    if pool.is_empty() {
        return Err(Error::Empty("bootstrap pool".into()));
    }
    if pool.iter().any(|z| z.len() != INTERVALS_PER_DAY) {
        return Err(Error::InvalidArgument("pool vectors must hold 96 values".into()));
    }
    let l = block_length.get();
    let picks: Vec<Vec<usize>> = (0..block_length.count())
        .into_par_iter()
        .map(|pos| {
            let mut rng = substream(seed, Domain::BlockDraw, &[day as u64, pos as u64]);
            (0..replicates).map(|_| rng.random_range(0..pool.len())).collect()
        })
        .collect();
    Ok((0..replicates)
        .map(|r| {
            let mut path = Vec::with_capacity(INTERVALS_PER_DAY);
            for (pos, draws) in picks.iter().enumerate() {
                path.extend_from_slice(&pool[draws[r]][pos * l..(pos + 1) * l]);
            }
            path
        })
        .collect())
}

/// Interval bounds per slot from full-value trajectories (one per replicate).
pub fn intervals_from_paths(
    day: usize,
    point: Vec<f64>,
    paths: &[Vec<f64>],
    alphas: &[f64],
    cluster: Option<usize>,
) -> Result<IntervalForecast> {
    if paths.len() < 2 {
        return Err(Error::Empty(format!("need at least 2 trajectories, got {}", paths.len())));
    }
    let width = point.len();
    if paths.iter().any(|p| p.len() != width) {
        return Err(Error::InvalidArgument("trajectory lengths differ".into()));
    }
    let mut bands: Vec<Band> = alphas
        .iter()
        .map(|&alpha| Band {
            alpha,
            lower: Vec::with_capacity(width),
            upper: Vec::with_capacity(width),
        })
        .collect();
    let mut column = vec![0.0; paths.len()];
    for slot in 0..width {
        for (c, p) in column.iter_mut().zip(paths) {
            *c = p[slot];
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("trajectories at slot {slot}")));
        }
        column.sort_by(f64::total_cmp);
        for band in &mut bands {
            let (lo, hi) = bounds_from_sorted(&column, band.alpha);
            band.lower.push(lo);
            band.upper.push(hi);
        }
    }
    Ok(IntervalForecast {
        day,
        point,
        bands,
        replicates: paths.len(),
        cluster,
    })
}

fn check_point(point: &DayVector) -> Result<()> {
    if point.values.len() != INTERVALS_PER_DAY {
        return Err(Error::InvalidArgument(format!(
            "point forecast has {} values",
            point.values.len()
        )));
    }
    if point.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("point forecast of day {}", point.day)));
    }
    Ok(())
}

fn forecast_from_pool(
    point: &DayVector,
    pool: &[&[f64]],
    block_length: BlockLength,
    settings: &BootstrapSettings,
    cluster: Option<usize>,
) -> Result<IntervalForecast> {
    let mut paths =
        sample_residual_paths(pool, block_length, settings.replicates, settings.seed, point.day)?;
    for path in &mut paths {
        for (v, yhat) in path.iter_mut().zip(&point.values) {
            *v += yhat;
        }
    }
    intervals_from_paths(point.day, point.values.clone(), &paths, &settings.alphas, cluster)
}

/// Cluster-based block bootstrap: draw residual blocks only from the memory
/// cluster whose demand centroid is nearest the point forecast.
pub fn cbb_forecast_day(
    point: &DayVector,
    memory: &ClusteredMemory,
    settings: &BootstrapSettings,
) -> Result<IntervalForecast> {
    settings.validate()?;
    check_point(point)?;
    let label = nearest_cluster(memory.clustering(), &point.values)?;
    let pool = memory.partition(label);
    if pool.is_empty() {
        return Err(Error::Empty(format!("memory cluster {label}")));
    }
    forecast_from_pool(point, &pool, memory.memory().block_length(), settings, Some(label))
}

/// Plain block bootstrap over the whole memory.
pub fn block_bootstrap_forecast_day(
    point: &DayVector,
    memory: &ResidualMemory,
    settings: &BootstrapSettings,
) -> Result<IntervalForecast> {
    settings.validate()?;
    check_point(point)?;
    forecast_from_pool(point, &memory.pool(), memory.block_length(), settings, None)
}
