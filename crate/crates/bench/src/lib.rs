//! Benchmark-only crate; the measurements live in benches/geometry.rs.
