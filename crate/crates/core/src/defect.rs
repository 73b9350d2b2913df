//! Calibration defect of a candidate special Lagrangian: sampled sup and
//! mean of the two pullbacks that must vanish, with the phase either
//! supplied or fitted at the grid centroid.
//!
//! The two-form defect at a sample is the Frobenius norm of
//! S^{-1/2} W S^{-1/2} with W the pulled-back Kahler form and S the
//! induced Riemannian metric; the sandwich makes the number invariant
//! under reparametrization of the domain box. The raw max entry of W is
//! also recorded for callers that want the unnormalized scale (the
//! plane-symmetry test quotes half of it). The volume defect is
//! |Im(e^{i theta} ι*Omega)| divided by the Riemannian density
//! sqrt(det S), so a unit-speed flat fiber scores exactly |Im(e^{i
//! theta} i^3)|.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::forms::{pullback_gram, pullback_volume_form, VolumeForm};
use crate::immersion::{ParamImmersion, SampleGrid};
use crate::potential::KahlerPotential;
use crate::C64;

/// Phase convention: special Lagrangian with phase theta means
/// ω|_L = 0 and Im(e^{i theta} Omega)|_L = 0. Theta enters only through
/// e^{i theta}, so it is reported in [0, pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSpec {
    Fixed(f64),
    /// Set theta so Im(e^{i theta} ι*Omega) = 0 at the grid centroid.
    Fit,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    /// Phase actually used, normalized to [0, pi).
    pub phase: f64,
    pub phase_was_fit: bool,
    /// Sup and mean over the grid of the normalized two-form defect.
    pub sup_omega: f64,
    pub mean_omega: f64,
    /// Sup over the grid of the raw max |entry| of ι*ω.
    pub sup_omega_raw: f64,
    /// Sup and mean of the normalized volume-form defect.
    pub sup_im: f64,
    pub mean_im: f64,
    /// Smallest Riemannian density seen (degeneracy diagnostic).
    pub min_density: f64,
    pub samples: usize,
}

pub fn normalize_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(std::f64::consts::PI);
    // map the representative pi (possible through rounding) back to 0
    if (t - std::f64::consts::PI).abs() < 1e-15 {
        t = 0.0;
    }
    t
}

/// Defect of ι under the metric of phi, calibrated by omega.
pub fn slag_defect(
    phi: &dyn KahlerPotential,
    omega: &VolumeForm,
    iota: &dyn ParamImmersion,
    grid: &SampleGrid,
    phase: PhaseSpec,
) -> Result<DefectReport> {
    if grid.dim() != iota.domain_dim() {
        return Err(GeomError::DimMismatch {
            expected: iota.domain_dim(),
            got: grid.dim(),
        });
    }
    let (theta, fit) = match phase {
        PhaseSpec::Fixed(t) => (normalize_phase(t), false),
        PhaseSpec::Fit => {
            let v0 = pullback_volume_form(omega, iota, &grid.centroid())?;
            if v0.norm() == 0.0 {
                return Err(GeomError::Immersion(
                    "volume pullback vanishes at centroid; cannot fit phase".into(),
                ));
            }
            (normalize_phase(-v0.arg()), true)
        }
    };
    let rot = C64::from_polar(1.0, theta);

    let mut sup_omega = 0.0_f64;
    let mut mean_omega = 0.0_f64;
    let mut sup_omega_raw = 0.0_f64;
    let mut sup_im = 0.0_f64;
    let mut mean_im = 0.0_f64;
    let mut min_density = f64::INFINITY;

    let n = grid.len();
    for t in grid.points() {
        let gram = pullback_gram(phi, iota, &t)?;
        let w = gram.map(|e| -2.0 * e.im);
        let s = gram.map(|e| e.re);
        let raw = w.iter().map(|e| e.abs()).fold(0.0, f64::max);

        // S^{-1/2} through the eigendecomposition of the induced metric
        let eig = SymmetricEigen::new(s);
        let mut det_s = 1.0;
        for &lam in eig.eigenvalues.iter() {
            if lam <= 1e-14 {
                return Err(GeomError::Immersion(format!(
                    "induced metric degenerate at t = {t:?} (eigenvalue {lam:.3e})"
                )));
            }
            det_s *= lam;
        }
        let q = &eig.eigenvectors;
        let inv_sqrt = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| {
            q[(i, j)] / eig.eigenvalues[j].sqrt()
        });
        let wn = inv_sqrt.transpose() * &w * &inv_sqrt;
        let omega_defect = wn.norm();

        let density = det_s.sqrt();
        let v = pullback_volume_form(omega, iota, &t)?;
        let im_defect = (rot * v).im.abs() / density;

        sup_omega = sup_omega.max(omega_defect);
        mean_omega += omega_defect;
        sup_omega_raw = sup_omega_raw.max(raw);
        sup_im = sup_im.max(im_defect);
        mean_im += im_defect;
        min_density = min_density.min(density);
    }

    Ok(DefectReport {
        phase: theta,
        phase_was_fit: fit,
        sup_omega,
        mean_omega: mean_omega / n as f64,
        sup_omega_raw,
        sup_im,
        mean_im: mean_im / n as f64,
        min_density,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::TorusFiber;
    use crate::potential::FlatPotential;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn flat_fiber_is_special_lagrangian_with_phase_half_pi() {
        let phi = FlatPotential::new(3);
        let omega = VolumeForm::standard(3);
        let fiber = TorusFiber::new([0.12, 0.31, 0.44], [1.0, 1.0, 1.0]).unwrap();
        let grid = fiber.default_grid();
        let rep = slag_defect(&phi, &omega, &fiber, &grid, PhaseSpec::Fit).unwrap();
        assert!(rep.sup_omega < 1e-12);
        assert!(rep.sup_im < 1e-12);
        // ι*Omega = -i, so the fitted phase is -pi/2 == pi/2 (mod pi)
        assert_abs_diff_eq!(rep.phase, PI / 2.0, epsilon = 1e-12);
        assert!(rep.phase_was_fit);
        assert_abs_diff_eq!(rep.min_density, 1.0, epsilon = 1e-12);
        assert_eq!(rep.samples, 125);
    }

    #[test]
    fn wrong_fixed_phase_shows_up_in_im_defect() {
        let phi = FlatPotential::new(3);
        let omega = VolumeForm::standard(3);
        let fiber = TorusFiber::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]).unwrap();
        let grid = fiber.default_grid();
        let rep = slag_defect(&phi, &omega, &fiber, &grid, PhaseSpec::Fixed(0.0)).unwrap();
        // Im(e^{i0}·(-i)) = -1
        assert_abs_diff_eq!(rep.sup_im, 1.0, epsilon = 1e-12);
        assert!(rep.sup_omega < 1e-12);
    }

    #[test]
    fn phase_normalization() {
        assert_abs_diff_eq!(normalize_phase(-PI / 2.0), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(normalize_phase(PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(normalize_phase(3.0 * PI / 2.0), PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_dim_must_match_domain() {
        let phi = FlatPotential::new(3);
        let omega = VolumeForm::standard(3);
        let fiber = TorusFiber::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]).unwrap();
        let grid = SampleGrid::periodic_cube(2, 1.0, 3).unwrap();
        assert!(slag_defect(&phi, &omega, &fiber, &grid, PhaseSpec::Fit).is_err());
    }
}
