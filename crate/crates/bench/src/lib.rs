//! Criterion benchmarks for `taa-core` live under `benches/`.
