//! Numerical Kahler geometry toolkit: radial Ricci-flat local models,
//! torus-orbifold fixed-locus bookkeeping, blowup charts, special
//! Lagrangian defect diagnostics, neck gluing with scaling probes, and
//! defect-energy minimization over deformed tori.
//!
//! Everything is chart-level and desk-scale: potentials are explicit,
//! metrics are dense Hermitian matrices at points, submanifolds are
//! parametrized immersions sampled on grids, and every claim is checked
//! against an independent oracle (closed form, brute-force expansion,
//! quadrature, or finite differences).

// Validation guards are written !(x > 0.0) on purpose: NaN fails them,
// while the x <= 0.0 form clippy prefers would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod config;
pub mod defect;
pub mod error;
pub mod fd;
pub mod forms;
pub mod gluing;
pub mod immersion;
pub mod metric;
pub mod orbifold;
pub mod perturb;
pub mod potential;
pub mod profiles;
pub mod scan;
pub mod slag;
pub mod suite;

pub use error::{GeomError, Result};

/// Complex scalar used everywhere in this crate.
pub type C64 = num_complex::Complex64;

/// Imaginary unit, for readability at call sites.
pub const I: C64 = C64::new(0.0, 1.0);
