//! Criterion benchmarks for the solver and the reference resolvents; see `benches/solver.rs`.
