//! Coordinate charts resolving the cyclic quotient singularity of order n.
//!
//! The chart trades the invariant coordinates for (w_1, ..., w_n) with
//! w_1 = z_d^n and w_i = z_i/z_d, where z_d is a distinguished direction.
//! Both transition maps are implemented, the round trip recovers the point
//! up to the deck rotation by an n-th root of unity, and the holomorphic
//! volume form picks up the constant factor 1/n (finite and nonvanishing
//! across the exceptional divisor w_1 = 0).

use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct BlowupChart {
    n: u32,
    direction: usize,
}

impl BlowupChart {
    pub fn new(n: u32) -> Result<Self> {
        Self::with_direction(n, 0)
    }

    /// Chart whose distinguished coordinate is `direction` (the one raised
    /// to the n-th power; all others are divided by it).
    pub fn with_direction(n: u32, direction: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeomError::Domain(format!(
                "cyclic quotient order must be at least 2, got {n}"
            )));
        }
        if direction as u32 >= n {
            return Err(GeomError::Domain(format!(
                "chart direction {direction} out of range for {n} coordinates"
            )));
        }
        Ok(BlowupChart { n, direction })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n as usize
    }

    /// Downstairs to chart: w_1 = z_d^n, remaining w in coordinate order
    /// are z_j/z_d.
    pub fn to_chart(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.check_len(z)?;
        let zd = z[self.direction];
        if zd.norm() == 0.0 {
            return Err(GeomError::ChartBoundary(
                "chart requires the distinguished coordinate to be nonzero".into(),
            ));
        }
        let mut w = Vec::with_capacity(z.len());
        w.push(zd.powu(self.n));
        for (j, &zj) in z.iter().enumerate() {
            if j != self.direction {
                w.push(zj / zd);
            }
        }
        Ok(w)
    }

    /// Chart to downstairs, using the principal n-th root of w_1. The result
    /// is one of the n preimages; the others differ by the deck rotation.
    pub fn from_chart(&self, w: &[C64]) -> Result<Vec<C64>> {
        self.check_len(w)?;
        if w[0].norm() == 0.0 {
            return Err(GeomError::ChartBoundary(
                "point lies on the exceptional divisor".into(),
            ));
        }
        let zd = w[0].powf(1.0 / f64::from(self.n));
        let mut z = vec![C64::new(0.0, 0.0); w.len()];
        z[self.direction] = zd;
        let mut k = 1;
        for (j, zj) in z.iter_mut().enumerate() {
            if j != self.direction {
                *zj = zd * w[k];
                k += 1;
            }
        }
        Ok(z)
    }

    /// Round trip and the detected deck index k with
    /// from_chart(to_chart(z)) = e^{2 pi i k / n} z.
    pub fn roundtrip(&self, z: &[C64]) -> Result<(Vec<C64>, u32)> {
        let back = self.from_chart(&self.to_chart(z)?)?;
        let scale: f64 = z.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for k in 0..self.n {
            let theta = 2.0 * std::f64::consts::PI * f64::from(k) / f64::from(self.n);
            let zeta = C64::new(0.0, theta).exp();
            let err: f64 = back
                .iter()
                .zip(z)
                .map(|(b, v)| (b - zeta * v).norm())
                .fold(0.0, f64::max);
            if err < 1e-9 * scale {
                return Ok((back, k));
            }
        }
        Err(GeomError::Domain(
            "round trip does not match any deck rotation".into(),
        ))
    }

    fn check_len(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(GeomError::DimMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }
}

/// Coefficient of the downstairs holomorphic volume form against
/// dw_1 ^ ... ^ dw_n, assembled by the chain rule. The root coordinate
/// contributes the power (1/n - 1) of w_1 and the factor 1/n; each of the
/// n - 1 remaining coordinates contributes the power 1/n. The exponents
/// cancel exactly, leaving the constant 1/n: the form extends across the
/// exceptional divisor, finite and nonvanishing.
pub fn volume_form_in_blowup_chart(n: u32) -> Result<C64> {
    if n < 2 {
        return Err(GeomError::Domain(format!(
            "cyclic quotient order must be at least 2, got {n}"
        )));
    }
    // Exponent of w_1 in the Jacobian determinant, in units of 1/n.
    let exponent_num: i64 = (1 - i64::from(n)) + i64::from(n - 1);
    debug_assert_eq!(exponent_num, 0, "w_1 powers must cancel");
    Ok(C64::new(1.0 / f64::from(n), 0.0))
}

/// Independent oracle: numeric Jacobian determinant of the chart-to-
/// downstairs map at a point with w_1 != 0, via fourth-order central
/// differences in each complex coordinate direction.
pub fn volume_coefficient_numeric(chart: &BlowupChart, w: &[C64]) -> Result<C64> {
    let dim = chart.dim();
    if w.len() != dim {
        return Err(GeomError::DimMismatch { expected: dim, got: w.len() });
    }
    let mut jac = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..dim {
        let h = 1e-3 * w[j].norm().max(1e-8);
        let eval = |s: f64| -> Result<Vec<C64>> {
            let mut wp = w.to_vec();
            wp[j] += C64::new(s * h, 0.0);
            chart.from_chart(&wp)
        };
        // Holomorphic map: a real-direction derivative is the complex one.
        let f2 = eval(2.0)?;
        let f1 = eval(1.0)?;
        let m1 = eval(-1.0)?;
        let m2 = eval(-2.0)?;
        for i in 0..dim {
            jac[(i, j)] = (-f2[i] + f1[i] * 8.0 - m1[i] * 8.0 + m2[i]) / (12.0 * h);
        }
    }
    Ok(jac.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_scale_case() {
        let chart = BlowupChart::new(2).unwrap();
        let w = chart.to_chart(&[c(1.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((w[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((w[1] - c(3.0, 0.0)).norm() < 1e-15);
        let (back, k) = chart.roundtrip(&[c(1.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(k, 0);
        assert!((back[1] - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn antipodal_points_share_chart_image() {
        let chart = BlowupChart::new(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z = [
                c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            ];
            if z[0].norm() < 1e-6 {
                continue;
            }
            let w_plus = chart.to_chart(&z).unwrap();
            let w_minus = chart.to_chart(&[-z[0], -z[1]]).unwrap();
            let scale = w_plus[0].norm().max(1.0);
            assert!((w_plus[0] - w_minus[0]).norm() < 1e-12 * scale);
            assert!((w_plus[1] - w_minus[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_chart_arithmetic() {
        let chart = BlowupChart::new(3).unwrap();
        let z = [c(2.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        let w = chart.to_chart(&z).unwrap();
        assert!((w[0] - c(8.0, 0.0)).norm() < 1e-12);
        assert!((w[1] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((w[2] - c(-0.5, 0.0)).norm() < 1e-12);
        let (_, k) = chart.roundtrip(&z).unwrap();
        assert!(k < 3);
    }

    #[test]
    fn roundtrip_deck_invariance_orders_two_to_four() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for n in 2u32..=4 {
            let chart = BlowupChart::new(n).unwrap();
            for _ in 0..50 {
                let z: Vec<C64> = (0..n)
                    .map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                    .collect();
                if z[0].norm() < 1e-3 {
                    continue;
                }
                chart.roundtrip(&z).unwrap();
            }
        }
    }

    #[test]
    fn divisor_is_a_chart_boundary() {
        let chart = BlowupChart::new(2).unwrap();
        assert!(matches!(
            chart.to_chart(&[c(0.0, 0.0), c(1.0, 0.0)]),
            Err(GeomError::ChartBoundary(_))
        ));
        assert!(matches!(
            chart.from_chart(&[c(0.0, 0.0), c(1.0, 0.0)]),
            Err(GeomError::ChartBoundary(_))
        ));
    }

    #[test]
    fn volume_coefficient_is_reciprocal_order() {
        assert!((volume_form_in_blowup_chart(2).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((volume_form_in_blowup_chart(3).unwrap() - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(volume_form_in_blowup_chart(1).is_err());
    }

    #[test]
    fn numeric_jacobian_confirms_volume_coefficient() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 2u32..=4 {
            let chart = BlowupChart::new(n).unwrap();
            let analytic = volume_form_in_blowup_chart(n).unwrap();
            for _ in 0..20 {
                // Keep w_1 away from the negative real axis so the principal
                // root is smooth across the finite-difference stencil.
                let r: f64 = rng.random_range(0.3..2.0);
                let phi: f64 = rng.random_range(-2.5..2.5);
                let mut w = vec![c(r * phi.cos(), r * phi.sin())];
                for _ in 1..n {
                    w.push(c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
                }
                let det = volume_coefficient_numeric(&chart, &w).unwrap();
                assert!(
                    (det - analytic).norm() < 1e-8,
                    "n={n} det={det} expected {analytic}"
                );
            }
        }
    }

    #[test]
    fn volume_coefficient_stays_constant_near_divisor() {
        let chart = BlowupChart::new(2).unwrap();
        let w = [c(1e-6 * 0.6, 1e-6 * 0.8), c(0.7, -0.3)];
        let det = volume_coefficient_numeric(&chart, &w).unwrap();
        assert!((det - c(0.5, 0.0)).norm() < 1e-8, "det={det}");
    }
}
