//! Criterion benchmarks for the filter; see `benches/filter.rs`.
