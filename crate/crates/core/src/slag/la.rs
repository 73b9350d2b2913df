//! The matrix family of Lagrangian planes x = A y in C^n: symmetry and
//! phase identities, principal-minor sums, the resolution-chart equations,
//! divisor quadrics with a smoothness probe, and limits of degenerating
//! members.

use nalgebra::{DMatrix, DVector};

use crate::defect::normalize_phase;
use crate::error::{GeomError, Result};
use crate::immersion::{ParamImmersion, SampleGrid};
use crate::C64;

/// Real n-plane x = A y inside C^n, parametrized by y.
#[derive(Debug, Clone)]
pub struct LaPlane {
    a: DMatrix<f64>,
}

impl LaPlane {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(GeomError::Domain("plane matrix must be square and nonempty".into()));
        }
        Ok(LaPlane { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The constant complex Jacobian A + iI.
    pub fn complex_frame(&self) -> DMatrix<C64> {
        let n = self.a.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            C64::new(self.a[(i, j)], if i == j { 1.0 } else { 0.0 })
        })
    }
}

impl ParamImmersion for LaPlane {
    fn domain_dim(&self) -> usize {
        self.a.nrows()
    }

    fn ambient_dim(&self) -> usize {
        self.a.nrows()
    }

    fn point(&self, t: &[f64]) -> Result<Vec<C64>> {
        let n = self.a.nrows();
        if t.len() != n {
            return Err(GeomError::DimMismatch { expected: n, got: t.len() });
        }
        let y = DVector::from_column_slice(t);
        let x = &self.a * &y;
        Ok((0..n).map(|i| C64::new(x[i], y[i])).collect())
    }

    fn jacobian(&self, t: &[f64]) -> Result<DMatrix<C64>> {
        let n = self.a.nrows();
        if t.len() != n {
            return Err(GeomError::DimMismatch { expected: n, got: t.len() });
        }
        Ok(self.complex_frame())
    }

    fn default_grid(&self) -> SampleGrid {
        let n = self.a.nrows();
        SampleGrid::new(vec![-1.0; n], vec![1.0; n], vec![4; n]).expect("static grid is valid")
    }
}

/// Supremum of the flat two-form pullback over the default grid, halved so
/// a unit off-symmetry reads as a unit defect, plus the Lagrangian verdict.
pub fn la_symmetry_test(a: &DMatrix<f64>) -> Result<(f64, bool)> {
    let plane = LaPlane::new(a.clone())?;
    let phi = crate::potential::FlatPotential::new(a.nrows());
    let mut sup: f64 = 0.0;
    for t in plane.default_grid().points() {
        let w = crate::forms::pullback_two_form(&phi, &plane, &t)?;
        sup = sup.max(w.amax());
    }
    let defect = 0.5 * sup;
    Ok((defect, defect < 1e-10))
}

/// Principal-minor sums of A with alternating quarter-turn weights, the
/// determinant they assemble to, and the phase that makes it real.
#[derive(Debug, Clone, Copy)]
pub struct MinorSums {
    /// Sum over even-size index sets with sign (-1)^{k/2}.
    pub even_sum: f64,
    /// Sum over odd-size index sets with sign (-1)^{(k-1)/2}.
    pub odd_sum: f64,
    pub det: C64,
    /// Normalized phase with Im(e^{i phase} det) = 0.
    pub phase: f64,
}

/// Expands det(I + iA) as the weighted sum of principal minors. Exponential
/// in n; bounded at 12.
pub fn minor_sum_identity(a: &DMatrix<f64>) -> Result<MinorSums> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(GeomError::Domain("minor sums need a square matrix".into()));
    }
    if n > 12 {
        return Err(GeomError::Domain(format!(
            "principal-minor expansion limited to 12 rows, got {n}"
        )));
    }
    let mut even_sum = 0.0;
    let mut odd_sum = 0.0;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let k = idx.len();
        let det = if k == 0 {
            1.0
        } else {
            a.select_rows(idx.as_slice()).select_columns(idx.as_slice()).determinant()
        };
        if k.is_multiple_of(2) {
            even_sum += if (k / 2).is_multiple_of(2) { det } else { -det };
        } else {
            odd_sum += if ((k - 1) / 2).is_multiple_of(2) { det } else { -det };
        }
    }
    let det = det_i_plus_ia(a);
    let assembled = C64::new(even_sum, odd_sum);
    debug_assert!((det - assembled).norm() <= 1e-9 * (1.0 + det.norm()));
    let phase = normalize_phase(-assembled.arg());
    Ok(MinorSums { even_sum, odd_sum, det, phase })
}

/// Direct determinant oracle det(I + iA).
pub fn det_i_plus_ia(a: &DMatrix<f64>) -> C64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        C64::new(if i == j { 1.0 } else { 0.0 }, a[(i, j)])
    });
    m.determinant()
}

/// Residual of the phase condition Im(e^{i theta} det(I + iA)) for a
/// symmetric matrix. The determinant form carries the quarter-turn minor
/// weights; a zero residual certifies the plane as calibrated at theta.
pub fn la_special_condition(a: &DMatrix<f64>, theta: f64) -> Result<f64> {
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 {
        return Err(GeomError::Domain(format!(
            "phase condition needs a symmetric matrix, asymmetry {asym}"
        )));
    }
    let rot = C64::new(0.0, theta).exp();
    Ok((rot * det_i_plus_ia(a)).im)
}

/// Quadratic polynomial over the real chart variables (u_2, v_2, ..., u_n,
/// v_n) in that order: constant + l.t + t'Qt with Q symmetric.
#[derive(Debug, Clone)]
pub struct QuadraticPoly {
    pub constant: f64,
    pub linear: DVector<f64>,
    pub quadratic: DMatrix<f64>,
}

impl QuadraticPoly {
    pub fn eval(&self, t: &DVector<f64>) -> f64 {
        self.constant + self.linear.dot(t) + (t.transpose() * &self.quadratic * t)[(0, 0)]
    }

    pub fn gradient(&self, t: &DVector<f64>) -> DVector<f64> {
        &self.linear + 2.0 * (&self.quadratic * t)
    }

    /// Largest absolute coefficient across all three blocks.
    pub fn max_coeff(&self) -> f64 {
        self.constant
            .abs()
            .max(self.linear.amax())
            .max(self.quadratic.amax())
    }

    /// Scale so the largest coefficient has absolute value 1 and the first
    /// significant coefficient (linear block first, then quadratic, then
    /// constant) is positive. Degenerate polynomials are rejected.
    pub fn canonicalized(&self) -> Result<QuadraticPoly> {
        let m = self.max_coeff();
        if m < 1e-13 {
            return Err(GeomError::Domain("divisor polynomial vanishes identically".into()));
        }
        let mut p = QuadraticPoly {
            constant: self.constant / m,
            linear: &self.linear / m,
            quadratic: &self.quadratic / m,
        };
        let lead = p
            .linear
            .iter()
            .copied()
            .chain(p.quadratic.iter().copied())
            .chain(std::iter::once(p.constant))
            .find(|x| x.abs() > 1e-9)
            .unwrap_or(1.0);
        if lead < 0.0 {
            p.constant = -p.constant;
            p.linear = -p.linear;
            p.quadratic = -p.quadratic;
        }
        Ok(p)
    }

    pub fn max_difference(&self, other: &QuadraticPoly) -> f64 {
        (self.constant - other.constant)
            .abs()
            .max((&self.linear - &other.linear).amax())
            .max((&self.quadratic - &other.quadratic).amax())
    }

    /// Build a pure linear polynomial from coefficients (test helper and
    /// expected-value constructor).
    pub fn linear_form(coeffs: &[f64]) -> QuadraticPoly {
        let d = coeffs.len();
        QuadraticPoly {
            constant: 0.0,
            linear: DVector::from_column_slice(coeffs),
            quadratic: DMatrix::zeros(d, d),
        }
    }
}

/// Affine form over the chart variables.
#[derive(Debug, Clone)]
struct AffineForm {
    c: f64,
    l: DVector<f64>,
}

impl AffineForm {
    fn product(&self, other: &AffineForm) -> QuadraticPoly {
        let d = self.l.len();
        let mut quadratic = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                quadratic[(i, j)] = 0.5 * (self.l[i] * other.l[j] + other.l[i] * self.l[j]);
            }
        }
        QuadraticPoly {
            constant: self.c * other.c,
            linear: &self.l * other.c + &other.l * self.c,
            quadratic,
        }
    }
}

fn u_index(i: usize) -> usize {
    2 * (i - 1)
}

fn v_index(i: usize) -> usize {
    2 * (i - 1) + 1
}

/// The four affine ingredients of the chart equations: the two sides of the
/// first equation (P x_1 = Q y_1) and, per remaining coordinate, the two
/// sides of the i-th equation (R_i x_1 = S_i y_1). Variables are indexed
/// u_i -> 2(i-2), v_i -> 2(i-2)+1 for i = 2..n.
fn chart_affine_forms(a: &DMatrix<f64>) -> (AffineForm, AffineForm, Vec<AffineForm>, Vec<AffineForm>) {
    let n = a.nrows();
    let d = 2 * (n - 1);
    let mut p = AffineForm { c: 1.0, l: DVector::zeros(d) };
    let mut q = AffineForm { c: a[(0, 0)], l: DVector::zeros(d) };
    for j in 1..n {
        p.l[v_index(j)] = -a[(0, j)];
        q.l[u_index(j)] = a[(0, j)];
    }
    let mut rs = Vec::with_capacity(n - 1);
    let mut ss = Vec::with_capacity(n - 1);
    for i in 1..n {
        let mut r = AffineForm { c: 0.0, l: DVector::zeros(d) };
        r.l[u_index(i)] = 1.0;
        let mut s = AffineForm { c: a[(i, 0)], l: DVector::zeros(d) };
        s.l[v_index(i)] = 1.0;
        for j in 1..n {
            r.l[v_index(j)] += -a[(i, j)];
            s.l[u_index(j)] += a[(i, j)];
        }
        rs.push(r);
        ss.push(s);
    }
    (p, q, rs, ss)
}

/// The n-1 divisor quadrics Q R_i - P S_i obtained by eliminating z_1
/// between the chart equations, canonicalized.
pub fn divisor_polynomials(a: &DMatrix<f64>) -> Result<Vec<QuadraticPoly>> {
    let n = a.nrows();
    if !a.is_square() || n < 2 {
        return Err(GeomError::Domain("divisor quadrics need a square matrix, n >= 2".into()));
    }
    let (p, q, rs, ss) = chart_affine_forms(a);
    let mut out = Vec::with_capacity(n - 1);
    for i in 0..(n - 1) {
        let mut g = q.product(&rs[i]);
        let ps = p.product(&ss[i]);
        g.constant -= ps.constant;
        g.linear -= ps.linear;
        g.quadratic -= ps.quadratic;
        out.push(g.canonicalized()?);
    }
    Ok(out)
}

/// Residuals of the chart equations at a chart point (z_1, w_2..w_n).
#[derive(Debug, Clone)]
pub struct ChartEquationReport {
    /// Residual of the first equation, P x_1 - Q y_1 with the chart values.
    pub eq_first: f64,
    /// Residuals of the remaining equations R_i x_1 - S_i y_1.
    pub eq_rest: Vec<f64>,
    /// Residuals of the canonicalized divisor quadrics.
    pub divisor: Vec<f64>,
    /// Set when the elimination divides by a vanishing expression.
    pub singular: bool,
}

pub fn chart_equations(a: &DMatrix<f64>, z1: C64, w: &[C64]) -> Result<ChartEquationReport> {
    let n = a.nrows();
    if w.len() != n - 1 {
        return Err(GeomError::DimMismatch { expected: n - 1, got: w.len() });
    }
    let d = 2 * (n - 1);
    let mut t = DVector::zeros(d);
    for (k, wk) in w.iter().enumerate() {
        t[2 * k] = wk.re;
        t[2 * k + 1] = wk.im;
    }
    let (p, q, rs, ss) = chart_affine_forms(a);
    let (x1, y1) = (z1.re, z1.im);
    let pv = p.c + p.l.dot(&t);
    let qv = q.c + q.l.dot(&t);
    let eq_first = pv * x1 - qv * y1;
    let mut eq_rest = Vec::with_capacity(n - 1);
    for i in 0..(n - 1) {
        let rv = rs[i].c + rs[i].l.dot(&t);
        let sv = ss[i].c + ss[i].l.dot(&t);
        eq_rest.push(rv * x1 - sv * y1);
    }
    let divisor = divisor_polynomials(a)?
        .iter()
        .map(|g| g.eval(&t))
        .collect();
    let scale = 1.0 + z1.norm();
    let singular = (pv * x1).abs() < 1e-12 * scale && (qv * y1).abs() < 1e-12 * scale;
    Ok(ChartEquationReport { eq_first, eq_rest, divisor, singular })
}

/// Chart samples generated from the plane itself: y is drawn uniformly,
/// pushed through x = Ay, and mapped to (z_1, w). Points too close to the
/// chart boundary are skipped.
pub fn plane_chart_samples(
    a: &DMatrix<f64>,
    count: usize,
    seed: u64,
) -> Result<Vec<(C64, Vec<C64>)>> {
    use rand::{Rng, SeedableRng};
    let n = a.nrows();
    let plane = LaPlane::new(a.clone())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count {
        attempts += 1;
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let z = plane.point(&y)?;
        if z[0].norm() < 0.3 {
            continue;
        }
        let w: Vec<C64> = z[1..].iter().map(|zi| zi / z[0]).collect();
        out.push((z[0], w));
    }
    if out.len() < count {
        return Err(GeomError::Domain(
            "could not draw enough chart samples away from the boundary".into(),
        ));
    }
    Ok(out)
}

/// Minimum singular value of the divisor-quadric Jacobian over samples:
/// a numerical rank certificate for smoothness of the divisor trace.
pub fn la_smoothness_probe(a: &DMatrix<f64>, samples: &[DVector<f64>]) -> Result<f64> {
    let polys = divisor_polynomials(a)?;
    if samples.is_empty() {
        return Err(GeomError::Domain("smoothness probe needs samples".into()));
    }
    let d = 2 * (a.nrows() - 1);
    let mut min_sigma = f64::INFINITY;
    for t in samples {
        if t.len() != d {
            return Err(GeomError::DimMismatch { expected: d, got: t.len() });
        }
        let mut jac = DMatrix::zeros(polys.len(), d);
        for (i, g) in polys.iter().enumerate() {
            jac.set_row(i, &g.gradient(t).transpose());
        }
        let sigma = jac
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        min_sigma = min_sigma.min(sigma);
    }
    Ok(min_sigma)
}

/// Chart variables (u, v interleaved) of plane-generated samples.
pub fn chart_variable_samples(a: &DMatrix<f64>, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    Ok(plane_chart_samples(a, count, seed)?
        .into_iter()
        .map(|(_, w)| {
            let mut t = DVector::zeros(2 * w.len());
            for (k, wk) in w.iter().enumerate() {
                t[2 * k] = wk.re;
                t[2 * k + 1] = wk.im;
            }
            t
        })
        .collect())
}

/// Limit of a degenerating sequence of planes, as orthonormal frames.
#[derive(Debug, Clone)]
pub struct LimitPlane {
    /// Real orthonormal frame of the limit plane (2n x n, interleaved
    /// real/imaginary ambient coordinates).
    pub frame: DMatrix<f64>,
    /// Two-form pullback supremum on the limit plane.
    pub omega_sup: f64,
    /// Normalized volume phase of the limit frame.
    pub phase: f64,
    /// Frame distance between the last two members (convergence measure).
    pub frame_delta: f64,
}

/// Orthonormalizes each member's frame A_k + iI (as a real 2n x n matrix)
/// by modified Gram-Schmidt with a deterministic sign convention, requires
/// the frames to settle, and reports the limit plane's Lagrangian defect
/// and phase. The members themselves may blow up; only the frames need to
/// converge.
pub fn limit_plane_of_sequence(seq: &[DMatrix<f64>]) -> Result<LimitPlane> {
    if seq.len() < 2 {
        return Err(GeomError::Domain("need at least two members to take a limit".into()));
    }
    let n = seq[0].nrows();
    let mut frames = Vec::with_capacity(seq.len());
    for a in seq {
        if a.nrows() != n || !a.is_square() {
            return Err(GeomError::DimMismatch { expected: n, got: a.nrows() });
        }
        frames.push(orthonormal_frame(a)?);
    }
    let last = &frames[frames.len() - 1];
    let prev = &frames[frames.len() - 2];
    let frame_delta = (last - prev).amax();
    if frame_delta > 1e-3 {
        return Err(GeomError::Domain(format!(
            "plane sequence has not converged: frame delta {frame_delta:.3e}"
        )));
    }
    // Complex frame of the limit plane.
    let jac = DMatrix::from_fn(n, n, |i, j| C64::new(last[(2 * i, j)], last[(2 * i + 1, j)]));
    let gram = jac.transpose() * jac.map(|z| z.conj());
    let omega_sup = gram.iter().map(|z| (2.0 * z.im).abs()).fold(0.0, f64::max);
    let phase = normalize_phase(-jac.determinant().arg());
    Ok(LimitPlane { frame: last.clone(), omega_sup, phase, frame_delta })
}

fn orthonormal_frame(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    // Column j of A + iI in interleaved real coordinates.
    let mut b = DMatrix::zeros(2 * n, n);
    for j in 0..n {
        for i in 0..n {
            b[(2 * i, j)] = a[(i, j)];
            b[(2 * i + 1, j)] = if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        for k in 0..j {
            let proj = b.column(j).dot(&b.column(k));
            let col_k = b.column(k).clone_owned();
            let mut col_j = b.column_mut(j);
            col_j -= col_k * proj;
        }
        let norm = b.column(j).norm();
        if norm < 1e-12 {
            return Err(GeomError::Domain("degenerate frame in plane sequence".into()));
        }
        b.column_mut(j).scale_mut(1.0 / norm);
        // Deterministic sign: largest-magnitude entry positive.
        let col = b.column(j);
        let mut lead: f64 = 0.0;
        for &x in col.iter() {
            if x.abs() > lead.abs() {
                lead = x;
            }
        }
        if lead < 0.0 {
            b.column_mut(j).neg_mut();
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defect::{slag_defect, PhaseSpec};
    use crate::forms::VolumeForm;
    use crate::potential::FlatPotential;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn dm(n: usize, entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, entries)
    }

    #[test]
    fn symmetric_plane_is_lagrangian() {
        let (d, ok) = la_symmetry_test(&dm(2, &[1.0, 2.0, 2.0, 0.0])).unwrap();
        assert!(d < 1e-14);
        assert!(ok);
        let (d0, ok0) = la_symmetry_test(&DMatrix::zeros(2, 2)).unwrap();
        assert!(d0 < 1e-14 && ok0);
    }

    #[test]
    fn skew_plane_defect_is_unit() {
        let (d, ok) = la_symmetry_test(&dm(2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(!ok);
    }

    #[test]
    fn symmetry_defect_scales_linearly() {
        let base = dm(2, &[1.0, 2.0, 2.0, 0.5]);
        let skew = dm(2, &[0.0, 1.0, -1.0, 0.0]);
        let mut prev = 0.0;
        for k in 1..=4 {
            let eps = 1e-3 * k as f64;
            let (d, _) = la_symmetry_test(&(&base + &skew * eps)).unwrap();
            // Defect = eps * max |K - K^t| entry = 2 eps for this K.
            assert!((d - 2.0 * eps).abs() < 1e-12);
            assert!(d > prev);
            prev = d;
        }
    }

    #[test]
    fn minor_sums_trivial_cases() {
        let z = DMatrix::zeros(3, 3);
        let ms = minor_sum_identity(&z).unwrap();
        assert!((ms.even_sum - 1.0).abs() < 1e-15);
        assert!(ms.odd_sum.abs() < 1e-15);
        assert!((ms.det - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(ms.phase.abs() < 1e-15);

        let id = DMatrix::identity(2, 2);
        let ms = minor_sum_identity(&id).unwrap();
        assert!(ms.even_sum.abs() < 1e-15);
        assert!((ms.odd_sum - 2.0).abs() < 1e-15);
        assert!((ms.det - C64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((ms.phase - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn minor_sums_match_determinant_for_random_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for n in 2..=6 {
            for _ in 0..40 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
                let ms = minor_sum_identity(&a).unwrap();
                let assembled = C64::new(ms.even_sum, ms.odd_sum);
                assert!(
                    (assembled - ms.det).norm() < 1e-11 * (1.0 + ms.det.norm()),
                    "n={n}"
                );
            }
        }
    }

    #[test]
    fn minor_sums_reject_large_matrices() {
        let a = DMatrix::zeros(13, 13);
        assert!(matches!(minor_sum_identity(&a), Err(GeomError::Domain(_))));
    }

    #[test]
    fn special_condition_examples() {
        assert!(la_special_condition(&DMatrix::zeros(2, 2), 0.0).unwrap().abs() < 1e-15);
        let id = DMatrix::identity(2, 2);
        let r = la_special_condition(&id, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(r.abs() < 1e-12);
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 0.0]));
        assert!((det_i_plus_ia(&a) - C64::new(0.0, 2.0)).norm() < 1e-14);
        let r = la_special_condition(&a, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn special_condition_requires_symmetry() {
        let a = dm(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(la_special_condition(&a, 0.0), Err(GeomError::Domain(_))));
    }

    #[test]
    fn phase_condition_agrees_with_volume_pullback() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for n in 2..=4usize {
            for _ in 0..10 {
                let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.5..1.5));
                a = (&a + a.transpose()) * 0.5;
                let ms = minor_sum_identity(&a).unwrap();
                assert!(la_special_condition(&a, ms.phase).unwrap().abs() < 1e-10);

                // Immersion-side phase: the volume pullback is det(A + iI),
                // which equals i^n times the conjugate of det(I + iA).
                let plane = LaPlane::new(a.clone()).unwrap();
                let omega = VolumeForm::standard(n);
                let v = crate::forms::pullback_volume_form(&omega, &plane, &vec![0.2; n]).unwrap();
                let rel = v - C64::new(0.0, 1.0).powu(n as u32) * ms.det.conj();
                assert!(rel.norm() < 1e-10 * (1.0 + v.norm()));

                // The fitted defect phase solves the same condition after
                // the quarter-turn shift.
                let phi = FlatPotential::new(n);
                let grid = plane.default_grid();
                let rep = slag_defect(&phi, &omega, &plane, &grid, PhaseSpec::Fit).unwrap();
                assert!(rep.sup_omega < 1e-12);
                assert!(rep.sup_im < 1e-10);
                let shifted = normalize_phase(-ms.phase - n as f64 * std::f64::consts::FRAC_PI_2);
                let diff = (rep.phase - shifted).abs();
                let wrapped = diff.min((diff - std::f64::consts::PI).abs());
                assert!(wrapped < 1e-9, "n={n} fit={} shifted={shifted}", rep.phase);
            }
        }
    }

    #[test]
    fn divisor_polynomials_diag_1_1_0() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 0.0]));
        let polys = divisor_polynomials(&a).unwrap();
        assert_eq!(polys.len(), 2);
        // Variables (u2, v2, u3, v3): the quadrics collapse to v2 = 0 and
        // u3 - v3 = 0.
        let expected = [
            QuadraticPoly::linear_form(&[0.0, 1.0, 0.0, 0.0]),
            QuadraticPoly::linear_form(&[0.0, 0.0, 1.0, -1.0]),
        ];
        for (g, e) in polys.iter().zip(&expected) {
            assert!(g.max_difference(e) < 1e-14, "got {g:?}");
        }
    }

    #[test]
    fn divisor_polynomials_diag_0_1_1() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 1.0]));
        let polys = divisor_polynomials(&a).unwrap();
        // Here the first-equation right side vanishes (a_11 = 0, no
        // off-diagonal terms), so each quadric is the plain sum: u_i + v_i.
        let expected = [
            QuadraticPoly::linear_form(&[1.0, 1.0, 0.0, 0.0]),
            QuadraticPoly::linear_form(&[0.0, 0.0, 1.0, 1.0]),
        ];
        for (g, e) in polys.iter().zip(&expected) {
            assert!(g.max_difference(e) < 1e-14, "got {g:?}");
        }
    }

    #[test]
    fn chart_equations_vanish_on_plane_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for n in 2..=4usize {
            for _ in 0..5 {
                let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.5..1.5));
                a = (&a + a.transpose()) * 0.5;
                for (z1, w) in plane_chart_samples(&a, 20, 11).unwrap() {
                    let rep = chart_equations(&a, z1, &w).unwrap();
                    assert!(rep.eq_first.abs() < 1e-10);
                    for r in &rep.eq_rest {
                        assert!(r.abs() < 1e-10);
                    }
                    for r in &rep.divisor {
                        assert!(r.abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_matrix_chart_behavior() {
        let a = DMatrix::zeros(2, 2);
        // On the plane x = 0, the first equation forces x_1 = 0 and the
        // divisor quadric is v_2 = 0 (real chart ratio), with the division
        // tagged singular.
        let z1 = C64::new(0.0, 0.8);
        let w = [C64::new(0.4, 0.0)];
        let rep = chart_equations(&a, z1, &w).unwrap();
        assert!(rep.eq_first.abs() < 1e-15);
        assert!(rep.divisor[0].abs() < 1e-15);
        assert!(rep.singular);
        let polys = divisor_polynomials(&a).unwrap();
        assert!(polys[0].max_difference(&QuadraticPoly::linear_form(&[0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn smoothness_probe_linear_system_has_unit_sigma() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 0.0]));
        let samples = chart_variable_samples(&a, 50, 3).unwrap();
        let sigma = la_smoothness_probe(&a, &samples).unwrap();
        assert!((sigma - 1.0).abs() < 1e-12, "sigma = {sigma}");
    }

    #[test]
    fn smoothness_probe_identity_two() {
        let a = DMatrix::identity(2, 2);
        let samples = chart_variable_samples(&a, 50, 5).unwrap();
        let sigma = la_smoothness_probe(&a, &samples).unwrap();
        assert!(sigma > 0.1, "sigma = {sigma}");
    }

    #[test]
    fn smoothness_probe_zero_matrix() {
        let a = DMatrix::zeros(2, 2);
        let samples = chart_variable_samples(&a, 30, 9).unwrap();
        let sigma = la_smoothness_probe(&a, &samples).unwrap();
        assert!((sigma - 1.0).abs() < 1e-12);
    }

    fn geometric_sequence(build: impl Fn(f64) -> DMatrix<f64>) -> Vec<DMatrix<f64>> {
        [1e2, 1e3, 1e4, 1e5, 1e6].iter().map(|&k| build(k)).collect()
    }

    #[test]
    fn degenerating_sequences_keep_lagrangian_limits() {
        let cases: Vec<Vec<DMatrix<f64>>> = vec![
            geometric_sequence(|k| dm(2, &[k, 0.0, 0.0, 0.0])),
            geometric_sequence(|k| dm(2, &[k, 0.0, 0.0, k])),
            geometric_sequence(|k| dm(2, &[k, 0.0, 0.0, -k])),
            geometric_sequence(|k| dm(2, &[k, 1.0, 1.0, 0.0])),
            geometric_sequence(|k| dm(2, &[k, k, k, k])),
            geometric_sequence(|k| dm(2, &[k, 0.0, 0.0, 3.0])),
            geometric_sequence(|k| dm(2, &[0.0, k, k, 0.0])),
            geometric_sequence(|k| {
                dm(3, &[k, 0.0, 0.0, 0.0, k, 0.0, 0.0, 0.0, 0.0])
            }),
            geometric_sequence(|k| {
                dm(3, &[k, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0])
            }),
            geometric_sequence(|k| dm(2, &[k * k, 0.0, 0.0, 1.0])),
        ];
        assert_eq!(cases.len(), 10);
        for (i, seq) in cases.iter().enumerate() {
            let lim = limit_plane_of_sequence(seq).unwrap();
            assert!(lim.omega_sup < 1e-9, "case {i}: omega_sup {}", lim.omega_sup);
            assert!(lim.frame_delta < 1e-4, "case {i}");
            // Phase settles along the sequence.
            let lim_prev = limit_plane_of_sequence(&seq[..seq.len() - 1]).unwrap();
            let dphase = (lim.phase - lim_prev.phase).abs();
            let wrapped = dphase.min((dphase - std::f64::consts::PI).abs());
            assert!(wrapped < 1e-2, "case {i}: phase drift {wrapped}");
        }
    }

    #[test]
    fn non_convergent_sequence_is_rejected() {
        // Alternating tilt directions never settle.
        let seq = vec![
            dm(2, &[1.0, 0.0, 0.0, 0.0]),
            dm(2, &[0.0, 0.0, 0.0, 1.0]),
            dm(2, &[1.0, 0.0, 0.0, 0.0]),
            dm(2, &[0.0, 0.0, 0.0, 1.0]),
        ];
        assert!(limit_plane_of_sequence(&seq).is_err());
    }

    proptest! {
        #[test]
        fn symmetry_test_iff_symmetric(s11 in -2.0f64..2.0, s12 in -2.0f64..2.0, s22 in -2.0f64..2.0, skew in -2.0f64..2.0) {
            let a = dm(2, &[s11, s12 + skew, s12 - skew, s22]);
            let (d, ok) = la_symmetry_test(&a).unwrap();
            prop_assert_eq!(ok, skew.abs() < 5e-11);
            // Defect equals the off-symmetry magnitude 2|skew| exactly.
            prop_assert!((d - 2.0 * skew.abs()).abs() < 1e-12);
        }

        #[test]
        fn minor_identity_random(n in 2usize..5, seed in 0u64..500) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let ms = minor_sum_identity(&a).unwrap();
            let assembled = C64::new(ms.even_sum, ms.odd_sum);
            prop_assert!((assembled - ms.det).norm() < 1e-11 * (1.0 + ms.det.norm()));
        }

        #[test]
        fn divisor_quadrics_vanish_on_plane(seed in 0u64..200) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 3usize;
            let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.5..1.5));
            a = (&a + a.transpose()) * 0.5;
            let polys = divisor_polynomials(&a).unwrap();
            for t in chart_variable_samples(&a, 10, seed ^ 0x5a5a).unwrap() {
                for g in &polys {
                    prop_assert!(g.eval(&t).abs() < 1e-9);
                }
            }
        }
    }
}
