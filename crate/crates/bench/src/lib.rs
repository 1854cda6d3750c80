//! Criterion benchmarks for `poisson3-core`; run with `cargo bench -p poisson3-bench`.
