//! Day-ahead electricity demand intervals from a cluster-based block
//! bootstrap of point-model residuals.
//!
//! A point regressor ([`point_models`]) forecasts each 15-minute interval of
//! the next day. Its training residuals, one 96-value vector per day, form a
//! memory that is partitioned by k-means clustering of the same days' demand
//! ([`cluster`]). For a test day, residual blocks are resampled from the
//! cluster nearest the point forecast and added back to it; order statistics
//! of the resulting trajectories give the interval bounds ([`bootstrap`]).
//! [`metrics`] scores intervals and [`eval`] runs expanding-window backtests.

pub mod bootstrap;
pub mod cluster;
pub mod data;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod point_models;
pub mod rng;

pub use bootstrap::{BlockLength, BootstrapSettings, ClusteredMemory, IntervalForecast, ResidualMemory};
pub use cluster::Clustering;
pub use data::{DayVector, DemandSeries, FeatureMatrix, HolidaySet, TrainTestSplit, INTERVALS_PER_DAY};
pub use error::{Error, ErrorKind, Result};
pub use eval::{Method, RunConfig};
pub use point_models::{FittedModel, RegressorSpec};
