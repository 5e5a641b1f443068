//! Criterion benchmarks for `hproj`; see `benches/`.
