//! Kahler potentials on coordinate charts.
//!
//! A potential is a real function of z in an open subset of C^n, exposed
//! through holomorphic derivatives: `gradient` is d(phi)/dz_i and
//! `hessian` is the mixed complex Hessian d^2(phi)/dz_i dzbar_j, whose
//! value at a point is the metric matrix in that chart.
//!
//! Every ambient geometry used in this crate is either flat or radial on
//! a subset of the coordinates, phi = f(U) + sum of |z_j|^2 over the
//! remaining ones with U the squared radius of the radial block, so the
//! concrete types below are `FlatPotential` and `SplitRadialPotential`
//! over a 1-d profile f supplied as a `RadialProfile`.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::C64;

pub trait KahlerPotential {
    fn dim(&self) -> usize;

    /// True when `z` lies in the chart the potential is defined on.
    fn admissible(&self, z: &[C64]) -> bool;

    fn value(&self, z: &[C64]) -> Result<f64>;

    /// Holomorphic gradient, entry i = d(phi)/dz_i.
    fn gradient(&self, z: &[C64]) -> Result<Vec<C64>>;

    /// Mixed complex Hessian, entry (i, j) = d^2(phi)/dz_i dzbar_j.
    /// Hermitian at every admissible point.
    fn hessian(&self, z: &[C64]) -> Result<DMatrix<C64>>;
}

/// Radial profile f(U), U > 0, with as many derivatives as the metric
/// pipeline needs. `value` may be unavailable for profiles the sources
/// only define through f' (the metric needs only d1, d2; d3 feeds
/// analytic metric derivatives in the deformation gradient).
pub trait RadialProfile {
    fn value(&self, u: f64) -> Result<f64>;
    fn d1(&self, u: f64) -> Result<f64>;
    fn d2(&self, u: f64) -> Result<f64>;
    fn d3(&self, u: f64) -> Result<f64>;
}

impl<P: RadialProfile + ?Sized> RadialProfile for &P {
    fn value(&self, u: f64) -> Result<f64> {
        (**self).value(u)
    }
    fn d1(&self, u: f64) -> Result<f64> {
        (**self).d1(u)
    }
    fn d2(&self, u: f64) -> Result<f64> {
        (**self).d2(u)
    }
    fn d3(&self, u: f64) -> Result<f64> {
        (**self).d3(u)
    }
}

pub(crate) fn check_dim(expected: usize, z: &[C64]) -> Result<()> {
    if z.len() != expected {
        return Err(GeomError::DimMismatch {
            expected,
            got: z.len(),
        });
    }
    Ok(())
}

/// phi(z) = sum |z_i|^2. The flat model; metric is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatPotential {
    dim: usize,
}

impl FlatPotential {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "chart dimension must be at least 1");
        FlatPotential { dim }
    }
}

impl KahlerPotential for FlatPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn admissible(&self, z: &[C64]) -> bool {
        z.len() == self.dim
    }

    fn value(&self, z: &[C64]) -> Result<f64> {
        check_dim(self.dim, z)?;
        Ok(z.iter().map(|w| w.norm_sqr()).sum())
    }

    fn gradient(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim, z)?;
        Ok(z.iter().map(|w| w.conj()).collect())
    }

    fn hessian(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        check_dim(self.dim, z)?;
        Ok(DMatrix::identity(self.dim, self.dim))
    }
}

/// phi(z) = f(U) + sum_{j not radial} |z_j|^2 with
/// U = sum_{i radial} |z_i|^2.
///
/// The radial block of the Hessian is f'(U) delta_ij + f''(U) zbar_i z_j,
/// the tail block is the identity, and the cross blocks vanish; this is
/// the exact-derivative path every consumer prefers over finite
/// differences.
#[derive(Debug, Clone)]
pub struct SplitRadialPotential<P> {
    profile: P,
    dim: usize,
    radial: Vec<usize>,
    is_radial: Vec<bool>,
}

impl<P: RadialProfile> SplitRadialPotential<P> {
    pub fn new(profile: P, dim: usize, radial: Vec<usize>) -> Result<Self> {
        if radial.is_empty() {
            return Err(GeomError::Domain(
                "radial index set must be non-empty".into(),
            ));
        }
        let mut is_radial = vec![false; dim];
        for &i in &radial {
            if i >= dim {
                return Err(GeomError::Domain(format!(
                    "radial index {i} out of range for dim {dim}"
                )));
            }
            if is_radial[i] {
                return Err(GeomError::Domain(format!("radial index {i} repeated")));
            }
            is_radial[i] = true;
        }
        Ok(SplitRadialPotential {
            profile,
            dim,
            radial,
            is_radial,
        })
    }

    /// Radial on every coordinate, phi = f(|z|^2).
    pub fn full(profile: P, dim: usize) -> Self {
        Self::new(profile, dim, (0..dim).collect()).expect("full radial index set is valid")
    }

    pub fn profile(&self) -> &P {
        &self.profile
    }

    pub fn radial_indices(&self) -> &[usize] {
        &self.radial
    }

    pub fn radius_sq(&self, z: &[C64]) -> f64 {
        self.radial.iter().map(|&i| z[i].norm_sqr()).sum()
    }
}

impl<P: RadialProfile> KahlerPotential for SplitRadialPotential<P> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn admissible(&self, z: &[C64]) -> bool {
        z.len() == self.dim && self.radius_sq(z) > 0.0
    }

    fn value(&self, z: &[C64]) -> Result<f64> {
        check_dim(self.dim, z)?;
        let u = self.radius_sq(z);
        let tail: f64 = (0..self.dim)
            .filter(|&j| !self.is_radial[j])
            .map(|j| z[j].norm_sqr())
            .sum();
        Ok(self.profile.value(u)? + tail)
    }

    fn gradient(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim, z)?;
        let f1 = self.profile.d1(self.radius_sq(z))?;
        Ok((0..self.dim)
            .map(|j| {
                if self.is_radial[j] {
                    f1 * z[j].conj()
                } else {
                    z[j].conj()
                }
            })
            .collect())
    }

    fn hessian(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        check_dim(self.dim, z)?;
        let u = self.radius_sq(z);
        let f1 = self.profile.d1(u)?;
        let f2 = self.profile.d2(u)?;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                h[(i, j)] = match (self.is_radial[i], self.is_radial[j]) {
                    (true, true) => {
                        let diag = if i == j { C64::new(f1, 0.0) } else { C64::new(0.0, 0.0) };
                        diag + f2 * z[i].conj() * z[j]
                    }
                    (false, false) if i == j => C64::new(1.0, 0.0),
                    _ => C64::new(0.0, 0.0),
                };
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::EguchiHanson;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_hessian_is_identity() {
        let phi = FlatPotential::new(3);
        let z = [C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 4.0)];
        let h = phi.hessian(&z).unwrap();
        assert_eq!(h, DMatrix::identity(3, 3));
        assert_abs_diff_eq!(phi.value(&z).unwrap(), 21.25, epsilon = 1e-14);
    }

    #[test]
    fn dim_mismatch_is_reported() {
        let phi = FlatPotential::new(2);
        let z = [C64::new(1.0, 0.0)];
        assert!(matches!(
            phi.value(&z),
            Err(GeomError::DimMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn split_radial_blocks() {
        // f_1(U) on (z1, z2), flat tail on z3; at z = (1, 0, 5) the radial
        // block is diag(1/sqrt(2), sqrt(2)) and the tail entry is 1.
        let eh = EguchiHanson::new(1.0).unwrap();
        let phi = SplitRadialPotential::new(eh, 3, vec![0, 1]).unwrap();
        let z = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(5.0, 0.0)];
        let h = phi.hessian(&z).unwrap();
        let s = 2.0_f64.sqrt();
        assert_abs_diff_eq!(h[(0, 0)].re, 1.0 / s, epsilon = 1e-14);
        assert_abs_diff_eq!(h[(1, 1)].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(h[(2, 2)].re, 1.0, epsilon = 1e-14);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_abs_diff_eq!(h[(i, j)].norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn split_radial_rejects_bad_indices() {
        let eh = EguchiHanson::new(1.0).unwrap();
        assert!(SplitRadialPotential::new(eh, 2, vec![0, 2]).is_err());
    }

    #[test]
    fn gradient_matches_value_fd() {
        let eh = EguchiHanson::new(0.7).unwrap();
        let phi = SplitRadialPotential::full(eh, 2);
        let z = [C64::new(0.8, -0.3), C64::new(0.1, 0.4)];
        let grad = phi.gradient(&z).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            // d/dx_i = 2 Re d/dz_i, d/dy_i = -2 Im d/dz_i
            let mut zp = z;
            let mut zm = z;
            zp[i] += C64::new(h, 0.0);
            zm[i] -= C64::new(h, 0.0);
            let dx = (phi.value(&zp).unwrap() - phi.value(&zm).unwrap()) / (2.0 * h);
            let mut zp = z;
            let mut zm = z;
            zp[i] += C64::new(0.0, h);
            zm[i] -= C64::new(0.0, h);
            let dy = (phi.value(&zp).unwrap() - phi.value(&zm).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(dx, 2.0 * grad[i].re, epsilon = 1e-8);
            assert_abs_diff_eq!(dy, -2.0 * grad[i].im, epsilon = 1e-8);
        }
    }
}
