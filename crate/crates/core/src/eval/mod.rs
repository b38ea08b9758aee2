//! Expanding-window backtests, method comparison, run configuration and
//! synthetic data.

mod backtest;
mod compare;
mod config;
mod synth;

pub use backtest::{run_expanding_window, BacktestOutput};
pub use compare::{
    compare_methods, score_rows, write_backtest, write_comparison, write_elbow, write_score_rows,
    ComparisonResult, ComparisonRow,
};
pub use config::{parse_block_length, Method, RunConfig};
pub use synth::{generate_synthetic, NoiseModel, Regime, SynthSpec};
