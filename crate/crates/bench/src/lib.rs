//! Criterion benchmarks for the quadrel pipeline live under `benches/`.
