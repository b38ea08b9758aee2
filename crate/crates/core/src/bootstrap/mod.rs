//! Residual memory, block splitting and the three interval methods: the
//! cluster-based block bootstrap, plain block bootstrap, and bootstrap
//! aggregating.

mod bagging;
mod blocks;
mod forecast;
mod io;
mod memory;

pub use bagging::{bagging_forecast, perturbed_targets};
pub use blocks::{quantile_ranks, quantiles_from_samples, split_blocks, BlockLength};
pub use forecast::{
    block_bootstrap_forecast_day, cbb_forecast_day, intervals_from_paths, sample_residual_paths,
    Band, BootstrapSettings, IntervalForecast,
};
pub use io::{level_label, write_forecast_csv};
pub use memory::{ClusteredMemory, ResidualMemory};
