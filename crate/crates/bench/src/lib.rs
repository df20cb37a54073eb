//! Criterion benchmarks for the `thinfilm` kernels; see `benches/`.
