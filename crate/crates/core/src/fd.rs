//! Central finite differences for mixed complex Hessians, and the Ricci
//! form built on them.
//!
//! The complex Hessian of a real function F is reconstructed from real
//! second partials through
//!     d^2F/dz_i dzbar_j
//!       = 1/4 [ F_{x_i x_j} + F_{y_i y_j} + i (F_{x_i y_j} - F_{y_i x_j}) ],
//! each real partial taken with a symmetric 4-point (or 3-point on the
//! diagonal) central stencil. The symmetric stencil makes the output
//! exactly Hermitian, not merely Hermitian up to discretization.
//!
//! Steps are relative: coordinate i uses h * max(1, |z_i|), the same for
//! its real and imaginary directions. The default h is 1e-4.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::metric::metric_from_potential;
use crate::potential::KahlerPotential;
use crate::C64;

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// d^2 F / dx_p dx_q at x0 by central differences with per-axis steps.
pub fn second_partial<F>(f: &F, x0: &[f64], p: usize, q: usize, hp: f64, hq: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut x = x0.to_vec();
    if p == q {
        let f0 = f(&x)?;
        x[p] = x0[p] + hp;
        let fp = f(&x)?;
        x[p] = x0[p] - hp;
        let fm = f(&x)?;
        Ok((fp - 2.0 * f0 + fm) / (hp * hp))
    } else {
        let mut eval = |sp: f64, sq: f64| -> Result<f64> {
            x[p] = x0[p] + sp * hp;
            x[q] = x0[q] + sq * hq;
            let v = f(&x)?;
            x[p] = x0[p];
            x[q] = x0[q];
            Ok(v)
        };
        Ok((eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?)
            / (4.0 * hp * hq))
    }
}

fn to_real(z: &[C64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * z.len());
    for w in z {
        x.push(w.re);
        x.push(w.im);
    }
    x
}

fn from_real(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect()
}

/// Mixed complex Hessian of a real-valued function of z by central
/// differences. Exactly Hermitian by stencil symmetry.
pub fn complex_hessian<F>(f: &F, z: &[C64], h_rel: f64) -> Result<DMatrix<C64>>
where
    F: Fn(&[C64]) -> Result<f64>,
{
    let n = z.len();
    let x0 = to_real(z);
    let freal = |x: &[f64]| f(&from_real(x));
    let step: Vec<f64> = z.iter().map(|w| h_rel * w.norm().max(1.0)).collect();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            let fxx = second_partial(&freal, &x0, xi, xj, step[i], step[j])?;
            let fyy = second_partial(&freal, &x0, yi, yj, step[i], step[j])?;
            let fxy = second_partial(&freal, &x0, xi, yj, step[i], step[j])?;
            let fyx = second_partial(&freal, &x0, yi, xj, step[i], step[j])?;
            let entry = C64::new(fxx + fyy, fxy - fyx) * 0.25;
            out[(i, j)] = entry;
            if i != j {
                out[(j, i)] = entry.conj();
            } else {
                // same-index mixed partials share one stencil, so the
                // imaginary part is an exact zero
                out[(i, i)] = C64::new(entry.re, 0.0);
            }
        }
    }
    Ok(out)
}

/// Ricci form -ddbar log det g by finite differences of the exact metric.
/// Errors if the metric loses positivity anywhere on the stencil.
pub fn ricci_form(phi: &dyn KahlerPotential, z: &[C64], h_rel: f64) -> Result<DMatrix<C64>> {
    let log_det = |w: &[C64]| -> Result<f64> { metric_from_potential(phi, w)?.log_det() };
    Ok(-complex_hessian(&log_det, z, h_rel)?)
}

/// Max entry magnitude of the Ricci form at z; the scalar the scans use.
pub fn ricci_sup_entry(phi: &dyn KahlerPotential, z: &[C64], h_rel: f64) -> Result<f64> {
    Ok(ricci_form(phi, z, h_rel)?
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max))
}
