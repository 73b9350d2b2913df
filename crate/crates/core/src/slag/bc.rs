//! The two-parameter family of Lagrangian planes in C^2 and its divisor
//! geometry in the resolution chart.
//!
//! The plane L_bc is the image of (v1, v2) -> ((b v2 - c v1) + i v1,
//! (c v2 + b v1) + i v2). Its trace on the exceptional divisor is the image
//! of the real projective line under the Mobius map q(m) with m = v2/v1,
//! always a circle or line in the q-chart. The quadric identity in q and the
//! ray-consistency identity are evaluated literally; the circle they cut out
//! is constructed by completing the square and certified by sampling.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::immersion::{ParamImmersion, SampleGrid};
use crate::potential::KahlerPotential;
use crate::C64;

/// Lagrangian plane through the origin of C^2 with parameters (b, c).
#[derive(Debug, Clone, Copy)]
pub struct LbcPlane {
    pub b: f64,
    pub c: f64,
}

impl LbcPlane {
    pub fn new(b: f64, c: f64) -> Self {
        LbcPlane { b, c }
    }
}

impl ParamImmersion for LbcPlane {
    fn domain_dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        2
    }

    fn point(&self, t: &[f64]) -> Result<Vec<C64>> {
        if t.len() != 2 {
            return Err(GeomError::DimMismatch { expected: 2, got: t.len() });
        }
        let (v1, v2) = (t[0], t[1]);
        Ok(vec![
            C64::new(self.b * v2 - self.c * v1, v1),
            C64::new(self.c * v2 + self.b * v1, v2),
        ])
    }

    fn jacobian(&self, t: &[f64]) -> Result<DMatrix<C64>> {
        if t.len() != 2 {
            return Err(GeomError::DimMismatch { expected: 2, got: t.len() });
        }
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(-self.c, 1.0),
                C64::new(self.b, 0.0),
                C64::new(self.b, 0.0),
                C64::new(self.c, 1.0),
            ],
        ))
    }

    /// Grid over the parameter square chosen so no node lands on the origin
    /// (the plane passes through 0, where radial metrics degenerate).
    fn default_grid(&self) -> SampleGrid {
        SampleGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![7, 7]).expect("static grid is valid")
    }
}

/// Trace of a plane family member on the q-chart of the divisor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartTrace {
    Circle { center: (f64, f64), radius: f64 },
    /// Degenerate member: a line through `point` with direction `dir`.
    Line { point: (f64, f64), dir: (f64, f64) },
    /// The quadric vanishes identically (no constraint on q).
    Plane,
}

/// The quadric constraint on the divisor chart coordinate q = q1 + i q2,
/// evaluated literally.
pub fn divisor_quadric_residual(b: f64, c: f64, q: (f64, f64)) -> f64 {
    let (q1, q2) = q;
    b * q1 * q1 + b * q2 * q2 - 2.0 * b * q1 + (b * b + c * c - 1.0) * q2 - b
}

/// Circle cut out by the divisor quadric, by completing the square.
/// For b = 0 the quadric is linear in q2 (a line), and for b = 0 with
/// c^2 = 1 it vanishes identically.
pub fn divisor_quadric_circle(b: f64, c: f64) -> ChartTrace {
    if b == 0.0 {
        if (c * c - 1.0).abs() == 0.0 {
            return ChartTrace::Plane;
        }
        return ChartTrace::Line { point: (0.0, 0.0), dir: (1.0, 0.0) };
    }
    let h = (b * b + c * c - 1.0) / (2.0 * b);
    ChartTrace::Circle {
        center: (1.0, -h),
        radius: (2.0 + h * h).sqrt(),
    }
}

/// `n` chart points walking a trace once (circles by angle, lines by a
/// symmetric arclength window, a plane by the unit circle).
pub fn trace_samples(trace: &ChartTrace, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            match trace {
                ChartTrace::Circle { center, radius } => {
                    (center.0 + radius * t.cos(), center.1 + radius * t.sin())
                }
                ChartTrace::Line { point, dir } => {
                    let s = (t - std::f64::consts::PI) * 3.0;
                    (point.0 + s * dir.0, point.1 + s * dir.1)
                }
                ChartTrace::Plane => (t.cos(), t.sin()),
            }
        })
        .collect()
}

/// Max absolute quadric residual over `n` points sampled on the trace.
pub fn quadric_self_residual(b: f64, c: f64, trace: &ChartTrace, n: usize) -> f64 {
    trace_samples(trace, n)
        .into_iter()
        .map(|q| divisor_quadric_residual(b, c, q).abs())
        .fold(0.0, f64::max)
}

/// Residual of the intersection quadric obtained by eliminating the plane
/// parameters against the chart relation z2 = z1 q:
/// b(q1^2 + q2^2) - 2c q1 + (b^2 + c^2 - 1) q2 - b = 0.
/// The ray-limit divisor trace satisfies this identically. It differs from
/// `divisor_quadric_residual` in the linear q1 coefficient (2c against 2b),
/// so the two loci coincide only on the b = c diagonal.
pub fn trace_quadric_residual(b: f64, c: f64, q: (f64, f64)) -> f64 {
    let (q1, q2) = q;
    b * q1 * q1 + b * q2 * q2 - 2.0 * c * q1 + (b * b + c * c - 1.0) * q2 - b
}

/// Left side of the ray-consistency identity: a normalized difference of
/// squares, bounded by 1 in absolute value whenever defined.
pub fn ray_cosine(b: f64, c: f64, q: (f64, f64)) -> Option<f64> {
    let s = b * q.0 - c;
    let t = b * q.1 - 1.0;
    let denom = s * s + t * t;
    if denom < 1e-28 {
        return None;
    }
    Some((s * s - t * t) / denom)
}

/// Residual of the ray-consistency identity against the actual base
/// coordinate p = z1^2 of a point on the plane.
pub fn ray_consistency_residual(b: f64, c: f64, q: (f64, f64), p: C64) -> Option<f64> {
    let lhs = ray_cosine(b, c, q)?;
    let pn = p.norm();
    if pn < 1e-28 {
        return None;
    }
    Some((lhs - p.re / pn).abs())
}

/// Actual trace of L_bc on the divisor: the image of the real projective
/// line under q(m) = ((c+i)m + b) / (bm + (i-c)), m = v2/v1.
///
/// Constructed from the images of m = 0, 1, infinity: a circle through
/// three points, or a tagged line when they are collinear (b = 0).
pub fn divisor_trace(b: f64, c: f64) -> ChartTrace {
    let num = |m: f64| C64::new(c, 1.0) * m + b;
    let den = |m: f64| C64::new(-c, 1.0) + b * m;
    if b == 0.0 {
        // q(m) = m (c+i)/(i-c): a line through the origin.
        let d = C64::new(c, 1.0) / C64::new(-c, 1.0);
        let n = d.norm();
        return ChartTrace::Line { point: (0.0, 0.0), dir: (d.re / n, d.im / n) };
    }
    let q0 = num(0.0) / den(0.0);
    let q1 = num(1.0) / den(1.0);
    // m = infinity: q = (c+i)/b.
    let qi = C64::new(c, 1.0) / b;
    circumcircle(q0, q1, qi)
}

/// Circle through three points, or the line through them if collinear.
fn circumcircle(p: C64, q: C64, r: C64) -> ChartTrace {
    // Perpendicular bisector intersection via the linear system
    // 2(q-p)·z = |q|^2-|p|^2, 2(r-p)·z = |r|^2-|p|^2.
    let a11 = 2.0 * (q.re - p.re);
    let a12 = 2.0 * (q.im - p.im);
    let a21 = 2.0 * (r.re - p.re);
    let a22 = 2.0 * (r.im - p.im);
    let b1 = q.norm_sqr() - p.norm_sqr();
    let b2 = r.norm_sqr() - p.norm_sqr();
    let det = a11 * a22 - a12 * a21;
    let scale = (a11.abs() + a12.abs() + a21.abs() + a22.abs()).max(1e-300);
    if det.abs() < 1e-12 * scale * scale {
        let d = q - p;
        let n = d.norm();
        return ChartTrace::Line { point: (p.re, p.im), dir: (d.re / n, d.im / n) };
    }
    let cx = (b1 * a22 - b2 * a12) / det;
    let cy = (a11 * b2 - a21 * b1) / det;
    let radius = (p - C64::new(cx, cy)).norm();
    ChartTrace::Circle { center: (cx, cy), radius }
}

/// Distance from a chart point to a trace.
pub fn trace_distance(trace: &ChartTrace, q: (f64, f64)) -> f64 {
    match trace {
        ChartTrace::Circle { center, radius } => {
            let d = ((q.0 - center.0).powi(2) + (q.1 - center.1).powi(2)).sqrt();
            (d - radius).abs()
        }
        ChartTrace::Line { point, dir } => {
            let (dx, dy) = (q.0 - point.0, q.1 - point.1);
            (dx * dir.1 - dy * dir.0).abs()
        }
        ChartTrace::Plane => 0.0,
    }
}

/// Outcome of the sampling probe for the chart-level topology of a family
/// member: number of divisor circles and connected components of the trace.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceTopology {
    Certified { divisor_circles: usize, components: usize },
    DegenerateLine { components: usize },
    Inconclusive(String),
}

/// Samples L_bc in the n=2 resolution chart (p, q) = (z1^2, z2/z1) over
/// rays with |q| <= r_max, and certifies connectivity of the sampled trace
/// by a proximity graph at three times the observed sampling scale.
/// A sampling certificate, not a proof.
pub fn trace_topology_probe(b: f64, c: f64, r_max: f64) -> Result<TraceTopology> {
    if r_max <= 0.0 {
        return Err(GeomError::Domain("sampling radius must be positive".into()));
    }
    let plane = LbcPlane::new(b, c);
    let n_rays = 48;
    let n_radii = 12;
    let mut pts: Vec<[f64; 4]> = Vec::new();
    for k in 0..n_rays {
        let psi = std::f64::consts::PI * k as f64 / n_rays as f64;
        for j in 0..n_radii {
            let r = 0.25 + 1.25 * j as f64 / (n_radii - 1) as f64;
            let v = [r * psi.cos(), r * psi.sin()];
            let z = plane.point(&v)?;
            if z[0].norm() < 1e-9 {
                continue;
            }
            let q = z[1] / z[0];
            if q.norm() > r_max {
                continue;
            }
            let p = z[0] * z[0];
            pts.push([p.re, p.im, q.re, q.im]);
        }
    }
    if pts.len() < 24 {
        return Ok(TraceTopology::Inconclusive(format!(
            "only {} samples inside the chart window",
            pts.len()
        )));
    }

    // Nearest-neighbor scale, then single-linkage components at 3x.
    let d2 = |a: &[f64; 4], b: &[f64; 4]| -> f64 {
        (0..4).map(|i| (a[i] - b[i]).powi(2)).sum()
    };
    let mut nn_max2: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, q) in pts.iter().enumerate() {
            if i != j {
                best = best.min(d2(p, q));
            }
        }
        nn_max2 = nn_max2.max(best);
    }
    let eps2 = 9.0 * nn_max2;
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if d2(&pts[i], &pts[j]) <= eps2 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..pts.len()).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    let components = roots.len();

    match divisor_trace(b, c) {
        ChartTrace::Circle { .. } => Ok(TraceTopology::Certified { divisor_circles: 1, components }),
        ChartTrace::Line { .. } => Ok(TraceTopology::DegenerateLine { components }),
        ChartTrace::Plane => Ok(TraceTopology::Inconclusive(
            "divisor trace is unconstrained".into(),
        )),
    }
}

/// Forward samples of the divisor chart coordinate q on a ray grid,
/// for quadric and ray-consistency checks.
pub fn forward_chart_samples(b: f64, c: f64, n: usize) -> Result<Vec<(C64, C64)>> {
    let plane = LbcPlane::new(b, c);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let psi = std::f64::consts::PI * (k as f64 + 0.37) / n as f64;
        let v = [1.3 * psi.cos(), 1.3 * psi.sin()];
        let z = plane.point(&v)?;
        if z[0].norm() < 1e-6 {
            continue;
        }
        out.push((z[0] * z[0], z[1] / z[0]));
    }
    Ok(out)
}

/// Supremum over a parameter grid of the flat two-form pullback entries.
/// Zero for every (b, c): the family is Lagrangian by construction.
pub fn lbc_flat_omega_sup(b: f64, c: f64) -> Result<f64> {
    let plane = LbcPlane::new(b, c);
    let phi = crate::potential::FlatPotential::new(2);
    let mut sup: f64 = 0.0;
    for t in plane.default_grid().points() {
        let w = crate::forms::pullback_two_form(&phi, &plane, &t)?;
        sup = sup.max(w.amax());
    }
    Ok(sup)
}

/// Flat volume-form pullback: constant, real, equal to -(1 + b^2 + c^2).
pub fn lbc_volume_constant(b: f64, c: f64) -> Result<C64> {
    let plane = LbcPlane::new(b, c);
    let omega = crate::forms::VolumeForm::standard(2);
    let vals: Vec<C64> = plane
        .default_grid()
        .points()
        .map(|t| crate::forms::pullback_volume_form(&omega, &plane, &t))
        .collect::<Result<_>>()?;
    let first = vals[0];
    for v in &vals {
        if (v - first).norm() > 1e-10 * first.norm().max(1.0) {
            return Err(GeomError::Immersion(
                "volume pullback is not constant on the plane".into(),
            ));
        }
    }
    Ok(first)
}

/// Pullback of the radial potential gradient to the plane: the one-form
/// sum_i d(phi)/dz_i dz_i restricted to the two tangent directions. For a
/// radial potential on L_bc this is a real one-form; the imaginary parts
/// are the obstruction and must vanish.
pub fn lbc_gradient_one_form_im_sup(
    b: f64,
    c: f64,
    profile: &dyn crate::potential::RadialProfile,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let plane = LbcPlane::new(b, c);
    let phi = crate::potential::SplitRadialPotential::full(ProfileRef(profile), 2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sup: f64 = 0.0;
    for _ in 0..samples {
        let v = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let z = plane.point(&v)?;
        let u: f64 = z.iter().map(|zi| zi.norm_sqr()).sum();
        if u < 1e-3 {
            continue;
        }
        let grad = phi.gradient(&z)?;
        let jac = plane.jacobian(&v)?;
        // Tangent pairing: (J^T grad)_a = sum_i dphi/dz_i dz_i(e_a).
        let pulled = jac.transpose() * DVector::from_vec(grad);
        for entry in pulled.iter() {
            sup = sup.max(entry.im.abs());
        }
    }
    Ok(sup)
}

/// Borrowed-profile adapter so callers can pass trait objects.
struct ProfileRef<'a>(&'a dyn crate::potential::RadialProfile);

impl crate::potential::RadialProfile for ProfileRef<'_> {
    fn value(&self, u: f64) -> Result<f64> {
        self.0.value(u)
    }
    fn d1(&self, u: f64) -> Result<f64> {
        self.0.d1(u)
    }
    fn d2(&self, u: f64) -> Result<f64> {
        self.0.d2(u)
    }
    fn d3(&self, u: f64) -> Result<f64> {
        self.0.d3(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defect::{slag_defect, PhaseSpec};
    use crate::forms::VolumeForm;
    use crate::potential::{FlatPotential, SplitRadialPotential};
    use crate::profiles::EguchiHanson;
    use proptest::prelude::*;

    #[test]
    fn coordinate_plane_limit() {
        let plane = LbcPlane::new(0.0, 0.0);
        let z = plane.point(&[0.7, -0.4]).unwrap();
        assert!((z[0] - C64::new(0.0, 0.7)).norm() < 1e-15);
        assert!((z[1] - C64::new(0.0, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn plane_is_z2_invariant() {
        let plane = LbcPlane::new(0.8, -0.3);
        let z = plane.point(&[0.5, 1.1]).unwrap();
        let zm = plane.point(&[-0.5, -1.1]).unwrap();
        for j in 0..2 {
            assert!((z[j] + zm[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn flat_defect_vanishes_for_unit_b() {
        let plane = LbcPlane::new(1.0, 0.0);
        let phi = FlatPotential::new(2);
        let omega = VolumeForm::standard(2);
        let grid = plane.default_grid();
        let r = slag_defect(&phi, &omega, &plane, &grid, PhaseSpec::Fit).unwrap();
        assert!(r.sup_omega < 1e-9);
        assert!(r.sup_im < 1e-9);
        // Volume pullback is a negative real constant, so the fitted phase
        // normalizes to zero.
        assert!(r.phase.abs() < 1e-12);
    }

    #[test]
    fn resolved_metric_defect_vanishes_for_unit_b() {
        let plane = LbcPlane::new(1.0, 0.0);
        let phi = SplitRadialPotential::full(EguchiHanson::new(1.0).unwrap(), 2);
        let omega = VolumeForm::standard(2);
        let grid = plane.default_grid();
        let r = slag_defect(&phi, &omega, &plane, &grid, PhaseSpec::Fit).unwrap();
        assert!(r.sup_omega < 1e-9, "sup_omega = {}", r.sup_omega);
        assert!(r.sup_im < 1e-9, "sup_im = {}", r.sup_im);
    }

    #[test]
    fn volume_constant_matches_closed_form() {
        for (b, c) in [(1.0, 0.0), (0.5, -0.7), (0.0, 0.0), (-1.2, 2.0)] {
            let v = lbc_volume_constant(b, c).unwrap();
            assert!((v - C64::new(-(1.0 + b * b + c * c), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn quadric_circle_unit_b() {
        let t = divisor_quadric_circle(1.0, 0.0);
        match t {
            ChartTrace::Circle { center, radius } => {
                assert!((center.0 - 1.0).abs() < 1e-15);
                assert!(center.1.abs() < 1e-15);
                assert!((radius - 2.0f64.sqrt()).abs() < 1e-15);
            }
            _ => panic!("expected circle"),
        }
        assert!(quadric_self_residual(1.0, 0.0, &t, 100) < 1e-12);
    }

    #[test]
    fn quadric_degenerates_to_line_at_zero_b() {
        let t = divisor_quadric_circle(0.0, 2.0);
        match t {
            ChartTrace::Line { point, dir } => {
                assert_eq!(point, (0.0, 0.0));
                assert_eq!(dir, (1.0, 0.0));
            }
            _ => panic!("expected line"),
        }
        // The quadric itself: 3 q2 = 0 on the line q2 = 0.
        assert!(quadric_self_residual(0.0, 2.0, &t, 50) < 1e-12);
        assert_eq!(divisor_quadric_circle(0.0, 1.0), ChartTrace::Plane);
    }

    #[test]
    fn ray_cosine_is_bounded_on_quadric_circle() {
        let t = divisor_quadric_circle(1.0, 0.0);
        for k in 0..100 {
            let s = 2.0 * std::f64::consts::PI * k as f64 / 100.0;
            if let ChartTrace::Circle { center, radius } = t {
                let q = (center.0 + radius * s.cos(), center.1 + radius * s.sin());
                if let Some(lhs) = ray_cosine(1.0, 0.0, q) {
                    assert!(lhs.abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ray_consistency_holds_on_forward_samples() {
        for (b, c) in [(1.0, 0.0), (0.7, 0.4), (-0.9, 1.3)] {
            for (p, q) in forward_chart_samples(b, c, 60).unwrap() {
                if let Some(r) = ray_consistency_residual(b, c, (q.re, q.im), p) {
                    assert!(r < 1e-10, "b={b} c={c} residual {r}");
                }
            }
        }
    }

    #[test]
    fn actual_trace_passes_through_plus_minus_one_when_c_zero() {
        for b in [1.0, 0.5, -0.8, 0.01] {
            let t = divisor_trace(b, 0.0);
            assert!(trace_distance(&t, (1.0, 0.0)) < 1e-9, "b={b}");
            assert!(trace_distance(&t, (-1.0, 0.0)) < 1e-9, "b={b}");
        }
    }

    #[test]
    fn actual_trace_center_formula_when_c_zero() {
        for b in [1.0f64, 0.5, -0.8, 0.3] {
            match divisor_trace(b, 0.0) {
                ChartTrace::Circle { center, radius } => {
                    let y0 = (1.0 - b * b) / (2.0 * b);
                    assert!(center.0.abs() < 1e-9, "b={b}");
                    assert!((center.1 - y0).abs() < 1e-9, "b={b}");
                    assert!((radius - (1.0 + y0 * y0).sqrt()).abs() < 1e-9);
                }
                _ => panic!("expected circle for b={b}"),
            }
        }
    }

    #[test]
    fn forward_samples_lie_on_actual_trace() {
        for (b, c) in [(1.0, 0.0), (0.4, 0.0), (0.6, -1.1), (-0.3, 0.8)] {
            let t = divisor_trace(b, c);
            for (_, q) in forward_chart_samples(b, c, 80).unwrap() {
                assert!(
                    trace_distance(&t, (q.re, q.im)) < 1e-9,
                    "b={b} c={c} q={q}"
                );
            }
        }
    }

    #[test]
    fn trace_satisfies_eliminated_quadric() {
        // Includes b = 0 lines and the b = 0, c = +-1 members, where the
        // trace is the q1 = 0 axis and the quadric reduces to -2c q1.
        for (b, c) in [
            (1.0, 0.0),
            (0.7, 0.4),
            (-0.9, 1.3),
            (0.1, -1.0),
            (0.0, 0.5),
            (0.0, 1.0),
            (0.0, -1.0),
        ] {
            let t = divisor_trace(b, c);
            let scale = match &t {
                ChartTrace::Circle { radius, .. } => radius.max(1.0),
                _ => 10.0,
            };
            for q in trace_samples(&t, 64) {
                let r = trace_quadric_residual(b, c, q).abs();
                assert!(r < 1e-11 * scale, "b={b} c={c} q={q:?} r={r}");
            }
        }
    }

    #[test]
    fn eliminated_and_chart_quadrics_agree_only_on_diagonal() {
        // The difference is 2(b - c) q1, so off the diagonal the chart
        // quadric picks out a different circle than the ray-limit trace.
        let q = (1.0, 0.0);
        let gap = trace_quadric_residual(1.0, 0.0, q) - divisor_quadric_residual(1.0, 0.0, q);
        assert!((gap - 2.0).abs() < 1e-15);
        for (b, c) in [(0.6, 0.6), (-0.4, -0.4), (1.3, 1.3)] {
            for q in trace_samples(&divisor_trace(b, c), 32) {
                let gap = trace_quadric_residual(b, c, q) - divisor_quadric_residual(b, c, q);
                assert!(gap.abs() < 1e-10, "diagonal b=c={b} gap={gap}");
            }
        }
    }

    #[test]
    fn zero_b_trace_is_line_with_mobius_direction() {
        let c = 2.0;
        match divisor_trace(0.0, c) {
            ChartTrace::Line { dir, .. } => {
                let d = C64::new(c, 1.0) / C64::new(-c, 1.0);
                let cross = dir.0 * d.im - dir.1 * d.re;
                assert!(cross.abs() < 1e-12);
            }
            _ => panic!("expected line"),
        }
    }

    #[test]
    fn topology_probe_certifies_connected_circle() {
        for b in [1.0, 0.5] {
            match trace_topology_probe(b, 0.0, 4.0).unwrap() {
                TraceTopology::Certified { divisor_circles, components } => {
                    assert_eq!(divisor_circles, 1);
                    assert_eq!(components, 1, "b={b}");
                }
                other => panic!("unexpected outcome {other:?}"),
            }
        }
    }

    #[test]
    fn topology_probe_tags_degenerate_member() {
        match trace_topology_probe(0.0, 2.0, 4.0).unwrap() {
            TraceTopology::DegenerateLine { components } => {
                assert_eq!(components, 1);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn gradient_one_form_is_real_on_plane() {
        let eh = EguchiHanson::new(1.0).unwrap();
        for (b, c) in [(1.0, 0.0), (0.3, -0.9)] {
            let sup = lbc_gradient_one_form_im_sup(b, c, &eh, 1000, 5).unwrap();
            assert!(sup < 1e-12, "b={b} c={c} sup={sup}");
        }
    }

    proptest! {
        #[test]
        fn flat_omega_pullback_is_exactly_zero(b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let sup = lbc_flat_omega_sup(b, c).unwrap();
            prop_assert!(sup < 1e-13);
        }

        #[test]
        fn volume_constant_formula(b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let v = lbc_volume_constant(b, c).unwrap();
            let expected = -(1.0 + b * b + c * c);
            prop_assert!((v.re - expected).abs() < 1e-11 * expected.abs());
            prop_assert!(v.im.abs() < 1e-12);
        }

        #[test]
        fn quadric_circle_residual_small(b in 0.05f64..2.0, c in -2.0f64..2.0) {
            let t = divisor_quadric_circle(b, c);
            let r = quadric_self_residual(b, c, &t, 64);
            // Scale by the quadric coefficients for small b, large center.
            let h = (b * b + c * c - 1.0) / (2.0 * b);
            let scale = (1.0 + h * h) * b.abs() + 1.0;
            prop_assert!(r < 1e-11 * scale);
        }

        #[test]
        fn forward_samples_satisfy_eliminated_quadric(b in -1.5f64..1.5, c in -1.5f64..1.5) {
            prop_assume!(b.abs() > 1e-3);
            for (_, q) in forward_chart_samples(b, c, 24).unwrap() {
                let scale = 1.0 + q.norm_sqr();
                let r = trace_quadric_residual(b, c, (q.re, q.im)).abs();
                prop_assert!(r < 1e-9 * scale, "b={} c={} q={} r={}", b, c, q, r);
            }
        }

        #[test]
        fn forward_samples_on_trace(b in -1.5f64..1.5, c in -1.5f64..1.5) {
            prop_assume!(b.abs() > 1e-3);
            let t = divisor_trace(b, c);
            for (_, q) in forward_chart_samples(b, c, 24).unwrap() {
                // Scale tolerance by the circle size (centers grow like 1/b).
                let scale = match &t {
                    ChartTrace::Circle { radius, .. } => radius.max(1.0),
                    _ => 1.0,
                };
                prop_assert!(trace_distance(&t, (q.re, q.im)) < 1e-8 * scale);
            }
        }
    }
}
