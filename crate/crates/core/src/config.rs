//! Runtime configuration: one flat TOML file with a section per module.
//!
//! Every key has a default, so an empty file (or no file) is a valid
//! configuration. CLI flags override file values; the merged settings
//! feed the suites and scans so a report is reproducible from the config
//! plus the seed alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub orbifold: OrbifoldSection,
    pub neck: NeckSection,
    pub fd: FdSection,
    pub coverage: CoverageSection,
    pub perturb: PerturbSection,
}

/// Periods of the three elliptic factors, pure imaginary by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbifoldSection {
    /// Imaginary parts of tau_1, tau_2, tau_3.
    pub tau_im: [f64; 3],
}

impl Default for OrbifoldSection {
    fn default() -> Self {
        OrbifoldSection { tau_im: [1.0, 1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeckSection {
    /// Inner and outer cutoff radii of the local gluing window.
    pub r0: f64,
    pub r1: f64,
    /// Resolution parameters the scaling sweeps walk through.
    pub a_list: Vec<f64>,
    /// Radii used when necks are placed on all 32 curves at once; must
    /// keep the annuli pairwise disjoint (curve separation is 1/4).
    pub atlas_r0: f64,
    pub atlas_r1: f64,
}

impl Default for NeckSection {
    fn default() -> Self {
        NeckSection {
            r0: 0.5,
            r1: 1.0,
            a_list: vec![0.1, 0.05, 0.025, 0.0125],
            atlas_r0: 0.04,
            atlas_r1: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdSection {
    /// Relative step of the central second differences.
    pub step: f64,
}

impl Default for FdSection {
    fn default() -> Self {
        FdSection { step: crate::fd::DEFAULT_FD_STEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    /// Number of family circles swept (b-grid on [-1, 1]).
    pub b_grid: usize,
    /// Number of sphere samples tested against the family.
    pub samples: usize,
    /// Covering distance every sample must achieve.
    pub tolerance: f64,
}

impl Default for CoverageSection {
    fn default() -> Self {
        CoverageSection { b_grid: 401, samples: 1000, tolerance: 5e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSection {
    /// Fourier cutoff per parameter direction.
    pub modes: usize,
    /// Defect energy below which the optimizer declares convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// Quadrature points per parameter direction.
    pub grid: usize,
}

impl Default for PerturbSection {
    fn default() -> Self {
        PerturbSection { modes: 4, tol: 1e-9, max_iter: 800, grid: 6 }
    }
}

impl Config {
    /// Parses TOML text; the error carries the parser's line/column info.
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| GeomError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GeomError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GeomError::Config(msg));
        if self.orbifold.tau_im.iter().any(|&t| !(t > 0.0)) {
            return bad(format!("orbifold.tau_im must be positive, got {:?}", self.orbifold.tau_im));
        }
        if !(self.neck.r0 > 0.0 && self.neck.r0 < self.neck.r1) {
            return bad(format!("neck radii need 0 < r0 < r1, got ({}, {})", self.neck.r0, self.neck.r1));
        }
        if !(self.neck.atlas_r0 > 0.0 && self.neck.atlas_r0 < self.neck.atlas_r1) {
            return bad(format!(
                "neck atlas radii need 0 < atlas_r0 < atlas_r1, got ({}, {})",
                self.neck.atlas_r0, self.neck.atlas_r1
            ));
        }
        if self.neck.a_list.is_empty() {
            return bad("neck.a_list must not be empty".into());
        }
        if self.neck.a_list.iter().any(|&a| !(a > 0.0)) {
            return bad(format!("neck.a_list entries must be positive, got {:?}", self.neck.a_list));
        }
        if !(self.fd.step > 0.0 && self.fd.step < 0.1) {
            return bad(format!("fd.step must lie in (0, 0.1), got {}", self.fd.step));
        }
        if self.coverage.b_grid < 2 || self.coverage.samples == 0 {
            return bad("coverage grids must be non-empty (b_grid >= 2, samples >= 1)".into());
        }
        if !(self.coverage.tolerance > 0.0) {
            return bad(format!("coverage.tolerance must be positive, got {}", self.coverage.tolerance));
        }
        if self.perturb.modes == 0 {
            return bad("perturb.modes must be at least 1".into());
        }
        if !(self.perturb.tol > 0.0) {
            return bad(format!("perturb.tol must be positive, got {}", self.perturb.tol));
        }
        if self.perturb.max_iter == 0 || self.perturb.grid < 2 {
            return bad("perturb.max_iter must be >= 1 and perturb.grid >= 2".into());
        }
        Ok(())
    }
}
