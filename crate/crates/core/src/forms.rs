//! Pullbacks of the Kahler two-form, the holomorphic volume form, and
//! the coordinate area forms dx_j ∧ dy_j along parametrized immersions.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::immersion::{check_full_rank, ParamImmersion};
use crate::metric::metric_from_potential;
use crate::potential::KahlerPotential;
use crate::C64;

/// Holomorphic (n,0)-form Omega = c(z) dz_1 ∧ … ∧ dz_n on a chart,
/// carried by its scalar coefficient.
pub struct VolumeForm {
    dim: usize,
    coeff: Coeff,
}

type CoeffFn = Box<dyn Fn(&[C64]) -> Result<C64> + Send + Sync>;

enum Coeff {
    Const(C64),
    Fun(CoeffFn),
}

impl VolumeForm {
    /// dz_1 ∧ … ∧ dz_n.
    pub fn standard(dim: usize) -> Self {
        VolumeForm {
            dim,
            coeff: Coeff::Const(C64::new(1.0, 0.0)),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        VolumeForm {
            dim,
            coeff: Coeff::Const(c),
        }
    }

    pub fn with_coefficient<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[C64]) -> Result<C64> + Send + Sync + 'static,
    {
        VolumeForm {
            dim,
            coeff: Coeff::Fun(Box::new(f)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficient(&self, z: &[C64]) -> Result<C64> {
        match &self.coeff {
            Coeff::Const(c) => Ok(*c),
            Coeff::Fun(f) => f(z),
        }
    }
}

/// The Hermitian k×k Gram matrix M = J^T G conj(J) of an immersion at t:
/// everything else here is a fast read-off from it. Re M is the induced
/// Riemannian metric (in the normalization where the flat ambient metric
/// is Euclidean) and -2 Im M is the pulled-back Kahler form.
pub fn pullback_gram(
    phi: &dyn KahlerPotential,
    iota: &dyn ParamImmersion,
    t: &[f64],
) -> Result<DMatrix<C64>> {
    let z = iota.point(t)?;
    let j = iota.jacobian(t)?;
    check_full_rank(&j, t)?;
    let g = metric_from_potential(phi, &z)?;
    Ok(j.transpose() * g.matrix() * j.map(|e| e.conj()))
}

/// Matrix of ι*ω in the parameter basis, with
/// ω = i Σ g_{i jbar} dz_i ∧ dzbar_j; real antisymmetric by construction.
pub fn pullback_two_form(
    phi: &dyn KahlerPotential,
    iota: &dyn ParamImmersion,
    t: &[f64],
) -> Result<DMatrix<f64>> {
    Ok(pullback_gram(phi, iota, t)?.map(|e| -2.0 * e.im))
}

/// Induced Riemannian metric Re M on the parameter space.
pub fn induced_metric(
    phi: &dyn KahlerPotential,
    iota: &dyn ParamImmersion,
    t: &[f64],
) -> Result<DMatrix<f64>> {
    Ok(pullback_gram(phi, iota, t)?.map(|e| e.re))
}

/// Coefficient of ι*Omega against dt_1 ∧ … ∧ dt_k; requires k = n.
pub fn pullback_volume_form(
    omega: &VolumeForm,
    iota: &dyn ParamImmersion,
    t: &[f64],
) -> Result<C64> {
    if iota.domain_dim() != iota.ambient_dim() || iota.ambient_dim() != omega.dim() {
        return Err(GeomError::DimMismatch {
            expected: omega.dim(),
            got: iota.domain_dim(),
        });
    }
    let z = iota.point(t)?;
    let j = iota.jacobian(t)?;
    Ok(omega.coefficient(&z)? * j.determinant())
}

/// Matrix of ι*(dx_m ∧ dy_m) in the parameter basis: entry (α, β) is
/// (dx_m ∧ dy_m)(∂_α, ∂_β) with x_m = Re z_m, y_m = Im z_m.
pub fn pullback_coordinate_area_form(
    iota: &dyn ParamImmersion,
    t: &[f64],
    m: usize,
) -> Result<DMatrix<f64>> {
    if m >= iota.ambient_dim() {
        return Err(GeomError::Domain(format!(
            "coordinate index {m} out of range for ambient dim {}",
            iota.ambient_dim()
        )));
    }
    let j = iota.jacobian(t)?;
    let k = iota.domain_dim();
    let mut w = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in (a + 1)..k {
            let v = j[(m, a)].re * j[(m, b)].im - j[(m, b)].re * j[(m, a)].im;
            w[(a, b)] = v;
            w[(b, a)] = -v;
        }
    }
    Ok(w)
}
