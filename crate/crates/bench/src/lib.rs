//! Criterion benchmarks for groundspan live under `benches/`.
