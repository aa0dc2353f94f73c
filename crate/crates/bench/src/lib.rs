//! Criterion benchmarks for `sandwich-core`; the targets live in `benches/`.
