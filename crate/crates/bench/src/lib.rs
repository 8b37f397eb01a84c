//! Criterion benchmarks for the muxphoton engine live under `benches/`.
