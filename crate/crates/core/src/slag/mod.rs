//! Special Lagrangian test families: the two-parameter plane family in the
//! resolved quotient chart with its divisor circles and coverage
//! certificate, and the matrix family of planes with minor-sum phase
//! identities and blowup chart equations.

pub mod bc;
pub mod coverage;
pub mod la;

pub use bc::{
    divisor_quadric_circle, divisor_quadric_residual, divisor_trace, trace_quadric_residual,
    trace_samples, trace_topology_probe, ChartTrace, LbcPlane, TraceTopology,
};
pub use coverage::{coverage_report, CoverageReport};
pub use la::{
    chart_equations, divisor_polynomials, la_smoothness_probe, la_special_condition,
    la_symmetry_test, limit_plane_of_sequence, minor_sum_identity, LaPlane, MinorSums,
    QuadraticPoly,
};
