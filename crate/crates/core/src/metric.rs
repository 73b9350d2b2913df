//! Hermitian metric matrices evaluated from Kahler potentials.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GeomError, Result};
use crate::potential::KahlerPotential;
use crate::C64;

/// A validated Hermitian matrix g_{i jbar} at a point. Construction
/// symmetrizes away rounding asymmetry but rejects anything beyond the
/// tolerance, so downstream eigenvalue work can assume exact Hermiticity.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMetric {
    mat: DMatrix<C64>,
}

pub const HERMITICITY_TOL: f64 = 1e-12;

impl HermitianMetric {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(GeomError::DimMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let scale = mat.iter().map(|e| e.norm()).fold(0.0, f64::max).max(1.0);
        let adj = mat.adjoint();
        let dev = (&mat - &adj).iter().map(|e| e.norm()).fold(0.0, f64::max);
        if dev > HERMITICITY_TOL * scale {
            return Err(GeomError::DegenerateMetric(format!(
                "matrix deviates from Hermitian by {dev:.3e} (scale {scale:.3e})"
            )));
        }
        Ok(HermitianMetric {
            mat: (mat + adj) * C64::new(0.5, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.mat.clone().cholesky().is_some()
    }

    /// Determinant (real for Hermitian input), as the product of
    /// eigenvalues.
    pub fn det(&self) -> f64 {
        self.eigenvalues().iter().product()
    }

    /// ln det g; errors when any eigenvalue is not strictly positive,
    /// since that is a degenerate metric wherever this is used.
    pub fn log_det(&self) -> Result<f64> {
        let mut acc = 0.0;
        for lam in self.eigenvalues() {
            if lam <= 0.0 {
                return Err(GeomError::DegenerateMetric(format!(
                    "non-positive eigenvalue {lam:.6e} in log det"
                )));
            }
            acc += lam.ln();
        }
        Ok(acc)
    }
}

/// The metric of a potential at a point: its mixed complex Hessian.
pub fn metric_from_potential(phi: &dyn KahlerPotential, z: &[C64]) -> Result<HermitianMetric> {
    if !phi.admissible(z) {
        return Err(GeomError::Domain(format!(
            "point not admissible for the potential (dim {})",
            phi.dim()
        )));
    }
    HermitianMetric::new(phi.hessian(z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{FlatPotential, SplitRadialPotential};
    use crate::profiles::EguchiHanson;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_metric_is_identity() {
        let phi = FlatPotential::new(2);
        let z = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let g = metric_from_potential(&phi, &z).unwrap();
        assert_eq!(g.matrix(), &DMatrix::identity(2, 2));
        assert_abs_diff_eq!(g.det(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eh_metric_at_unit_point() {
        // f_1 at z = (1, 0): diag(1/sqrt(2), sqrt(2)), det exactly 1.
        let phi = SplitRadialPotential::full(EguchiHanson::new(1.0).unwrap(), 2);
        let z = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let g = metric_from_potential(&phi, &z).unwrap();
        let s = 2.0_f64.sqrt();
        assert_abs_diff_eq!(g.matrix()[(0, 0)].re, 1.0 / s, epsilon = 1e-14);
        assert_abs_diff_eq!(g.matrix()[(1, 1)].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(g.det(), 1.0, epsilon = 1e-13);
        assert!(g.is_positive_definite());
        let eigs = g.eigenvalues();
        assert_abs_diff_eq!(eigs[0], 1.0 / s, epsilon = 1e-13);
        assert_abs_diff_eq!(eigs[1], s, epsilon = 1e-13);
    }

    #[test]
    fn inadmissible_point_is_domain_error() {
        let phi = SplitRadialPotential::full(EguchiHanson::new(1.0).unwrap(), 2);
        let z = [C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!(matches!(
            metric_from_potential(&phi, &z),
            Err(GeomError::Domain(_))
        ));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(HermitianMetric::new(m).is_err());
    }

    #[test]
    fn log_det_flags_degeneracy() {
        let m = DMatrix::from_diagonal_element(2, 2, C64::new(-1.0, 0.0));
        let g = HermitianMetric::new(m).unwrap();
        assert!(g.log_det().is_err());
    }
}
