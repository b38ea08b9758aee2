//! Criterion benchmarks for the interval engine live under `benches/`.
