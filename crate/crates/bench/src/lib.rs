//! Criterion benchmarks for the viana lab live in `benches/`.
