//! Criterion benchmarks for the separated-trap simulator live in `benches/`.
