//! Benchmark-only crate; see benches/thermal.rs.
