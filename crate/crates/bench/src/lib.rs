//! Criterion benchmarks for `tssa-core`; see `benches/`.
