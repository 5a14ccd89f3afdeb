//! Criterion benchmarks for flowcomp live in `benches/`.
