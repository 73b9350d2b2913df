//! Defect minimization for approximate special Lagrangian tori.
//!
//! A torus fiber is deformed by a truncated Fourier normal field on its
//! real coordinates, the ambient metric is flat or carries glued
//! Eguchi-Hanson necks, and the objective is the discretized calibration
//! defect: the squared two-form pullback plus the squared imaginary part
//! of the rotated volume pullback, summed over a parameter grid. The
//! optimizer is plain gradient descent with a backtracking line search
//! and an analytic adjoint gradient (cross-checked against finite
//! differences in the tests).
//!
//! The surgered torus construction lives here too: the candidate that
//! caps the fiber through four singular curves with locally resolved
//! pieces, blended by the same quintic cutoff as the metric gluing. Its
//! convergence to an exact special Lagrangian is an open question in the
//! sources; this module reports diagnostics and asserts nothing.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::gluing::{Cutoff, GluedProfile};
use crate::immersion::{ParamImmersion, SampleGrid, TorusFiber};
use crate::potential::RadialProfile;
use crate::profiles::EguchiHanson;
use crate::C64;

/// Real Fourier basis on the parameter 3-torus: the constant plus a
/// cosine and a sine for every wavevector in a fixed half-space order,
/// with |k|_inf bounded by the cutoff.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    cutoff: usize,
    periods: [f64; 3],
    waves: Vec<[i32; 3]>,
}

impl ModeBasis {
    pub fn new(cutoff: usize, periods: [f64; 3]) -> ModeBasis {
        let n = cutoff as i32;
        let mut waves = Vec::new();
        for k1 in -n..=n {
            for k2 in -n..=n {
                for k3 in -n..=n {
                    let k = [k1, k2, k3];
                    // One representative per +-k pair, deterministic order.
                    let positive = k1 > 0
                        || (k1 == 0 && k2 > 0)
                        || (k1 == 0 && k2 == 0 && k3 > 0);
                    if positive {
                        waves.push(k);
                    }
                }
            }
        }
        ModeBasis { cutoff, periods, waves }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of scalar basis functions: 1 + 2 * wavevectors.
    pub fn len(&self) -> usize {
        1 + 2 * self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn angular(&self, wave: &[i32; 3]) -> [f64; 3] {
        [
            std::f64::consts::TAU * wave[0] as f64 / self.periods[0],
            std::f64::consts::TAU * wave[1] as f64 / self.periods[1],
            std::f64::consts::TAU * wave[2] as f64 / self.periods[2],
        ]
    }

    /// Basis values and parameter gradients at `t`, appended row-wise into
    /// caller buffers of length `len()` and `3 * len()`.
    pub fn eval(&self, t: &[f64; 3], vals: &mut [f64], grads: &mut [f64]) {
        vals[0] = 1.0;
        grads[0] = 0.0;
        grads[1] = 0.0;
        grads[2] = 0.0;
        for (m, wave) in self.waves.iter().enumerate() {
            let w = self.angular(wave);
            let phase = w[0] * t[0] + w[1] * t[1] + w[2] * t[2];
            let (s, c) = phase.sin_cos();
            let ic = 1 + 2 * m;
            let is = 2 + 2 * m;
            vals[ic] = c;
            vals[is] = s;
            for axis in 0..3 {
                grads[3 * ic + axis] = -w[axis] * s;
                grads[3 * is + axis] = w[axis] * c;
            }
        }
    }
}

/// Torus fiber with a truncated Fourier deformation of its real parts:
/// z_j(t) = (base_j + nu_j(t)) + i t_j. Zero coefficients reproduce the
/// base fiber exactly.
#[derive(Debug, Clone)]
pub struct DeformedTorus {
    base: TorusFiber,
    basis: ModeBasis,
    /// 3 x len() coefficient matrix; row j deforms coordinate j.
    coeffs: DMatrix<f64>,
    grid_count: usize,
}

/// Deformations are confined well inside one fundamental cell so the
/// ambient chart (and the neck wrap) stays injective on the image.
pub const DEFORMATION_GUARD: f64 = 0.2;

impl DeformedTorus {
    pub fn new(base: TorusFiber, cutoff: usize) -> DeformedTorus {
        let basis = ModeBasis::new(cutoff, base.im_periods());
        let coeffs = DMatrix::zeros(3, basis.len());
        DeformedTorus { base, basis, coeffs, grid_count: 6 }
    }

    pub fn with_grid_count(mut self, count: usize) -> DeformedTorus {
        self.grid_count = count.max(2);
        self
    }

    pub fn base(&self) -> &TorusFiber {
        &self.base
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Replace the coefficients, enforcing the chart guard through the
    /// L1 bound sup |nu_j| <= sum_mu |c_j mu|.
    pub fn with_coeffs(mut self, coeffs: DMatrix<f64>) -> Result<DeformedTorus> {
        if coeffs.nrows() != 3 || coeffs.ncols() != self.basis.len() {
            return Err(GeomError::DimMismatch {
                expected: 3 * self.basis.len(),
                got: coeffs.nrows() * coeffs.ncols(),
            });
        }
        if displacement_bound(&coeffs) > DEFORMATION_GUARD {
            return Err(GeomError::ChartBoundary(format!(
                "deformation bound {} exceeds the chart guard {DEFORMATION_GUARD}",
                displacement_bound(&coeffs)
            )));
        }
        self.coeffs = coeffs;
        Ok(self)
    }

    /// Largest deviation of nu from its constant part over a sample grid:
    /// how far the torus is from being an exact (translated) fiber.
    pub fn nonconstant_amplitude(&self) -> f64 {
        let grid = SampleGrid::new(
            vec![0.0; 3],
            self.base.im_periods().to_vec(),
            vec![9; 3],
        )
        .expect("static grid is valid");
        let n = self.basis.len();
        let mut vals = vec![0.0; n];
        let mut grads = vec![0.0; 3 * n];
        let mut worst = 0.0_f64;
        for t in grid.points() {
            let t3 = [t[0], t[1], t[2]];
            self.basis.eval(&t3, &mut vals, &mut grads);
            for j in 0..3 {
                let mut dev = 0.0;
                for (mu, &val) in vals.iter().enumerate().skip(1) {
                    dev += self.coeffs[(j, mu)] * val;
                }
                worst = worst.max(dev.abs());
            }
        }
        worst
    }
}

fn displacement_bound(coeffs: &DMatrix<f64>) -> f64 {
    (0..coeffs.nrows())
        .map(|j| coeffs.row(j).iter().map(|c| c.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl ParamImmersion for DeformedTorus {
    fn domain_dim(&self) -> usize {
        3
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn point(&self, t: &[f64]) -> Result<Vec<C64>> {
        if t.len() != 3 {
            return Err(GeomError::DimMismatch { expected: 3, got: t.len() });
        }
        let n = self.basis.len();
        let mut vals = vec![0.0; n];
        let mut grads = vec![0.0; 3 * n];
        self.basis.eval(&[t[0], t[1], t[2]], &mut vals, &mut grads);
        let base = self.base.base();
        Ok((0..3)
            .map(|j| {
                let nu: f64 = (0..n).map(|mu| self.coeffs[(j, mu)] * vals[mu]).sum();
                C64::new(base[j] + nu, t[j])
            })
            .collect())
    }

    fn jacobian(&self, t: &[f64]) -> Result<DMatrix<C64>> {
        if t.len() != 3 {
            return Err(GeomError::DimMismatch { expected: 3, got: t.len() });
        }
        let n = self.basis.len();
        let mut vals = vec![0.0; n];
        let mut grads = vec![0.0; 3 * n];
        self.basis.eval(&[t[0], t[1], t[2]], &mut vals, &mut grads);
        let mut j = DMatrix::zeros(3, 3);
        for row in 0..3 {
            for axis in 0..3 {
                let dnu: f64 = (0..n)
                    .map(|mu| self.coeffs[(row, mu)] * grads[3 * mu + axis])
                    .sum();
                j[(row, axis)] = C64::new(dnu, if row == axis { 1.0 } else { 0.0 });
            }
        }
        Ok(j)
    }

    fn default_grid(&self) -> SampleGrid {
        SampleGrid::new(
            vec![0.0; 3],
            self.base.im_periods().to_vec(),
            vec![self.grid_count; 3],
        )
        .expect("torus grid is valid by construction")
    }
}

fn wrap_signed(x: f64) -> f64 {
    x - x.round()
}

fn wrap_c(z: C64) -> C64 {
    C64::new(wrap_signed(z.re), wrap_signed(z.im))
}

/// One glued neck inside the ambient chart: the profile applies to the
/// squared distance from `center` in the two `pinned` factors, wrapped to
/// the unit cell (pure-imaginary square periods).
#[derive(Debug, Clone)]
pub struct MetricNeck {
    pub pinned: (usize, usize),
    pub center: (C64, C64),
    pub profile: GluedProfile,
}

impl MetricNeck {
    fn offsets(&self, z: &[C64]) -> (C64, C64, f64) {
        let w0 = wrap_c(z[self.pinned.0] - self.center.0);
        let w1 = wrap_c(z[self.pinned.1] - self.center.1);
        (w0, w1, w0.norm_sqr() + w1.norm_sqr())
    }
}

/// Ambient Kahler metric for the deformation problem: flat, or flat with
/// glued necks along singular curves. Necks must be pairwise disjoint;
/// each point sees at most one active correction per pinned pair.
#[derive(Debug, Clone)]
pub enum AmbientMetric {
    Flat,
    GluedNecks { necks: Vec<MetricNeck> },
}

const NECK_CORE_GUARD: f64 = 1e-12;

impl AmbientMetric {
    pub fn single_neck(profile: GluedProfile, pinned: (usize, usize), center: (C64, C64)) -> Self {
        AmbientMetric::GluedNecks {
            necks: vec![MetricNeck { pinned, center, profile }],
        }
    }

    pub fn metric(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        let mut g = DMatrix::identity(3, 3);
        if let AmbientMetric::GluedNecks { necks } = self {
            for neck in necks {
                let (w0, w1, u) = neck.offsets(z);
                let (_, r1) = neck.profile.window();
                if u >= r1 * r1 {
                    continue;
                }
                if u < NECK_CORE_GUARD {
                    return Err(GeomError::ChartBoundary(
                        "point sits on a singular curve; the neck metric is undefined there"
                            .into(),
                    ));
                }
                let h1 = neck.profile.d1(u)?;
                let h2 = neck.profile.d2(u)?;
                let idx = [neck.pinned.0, neck.pinned.1];
                let w = [w0, w1];
                for (bi, &i) in idx.iter().enumerate() {
                    for (bj, &j) in idx.iter().enumerate() {
                        let diag = if i == j { h1 - 1.0 } else { 0.0 };
                        g[(i, j)] += C64::new(diag, 0.0) + h2 * w[bi].conj() * w[bj];
                    }
                }
            }
        }
        Ok(g)
    }

    /// Derivative of the metric with respect to the real part of z_m.
    /// Imaginary-part derivatives are never needed: the deformation moves
    /// real parts only.
    pub fn metric_dx(&self, z: &[C64], m: usize) -> Result<DMatrix<C64>> {
        let mut dg = DMatrix::zeros(3, 3);
        if let AmbientMetric::GluedNecks { necks } = self {
            for neck in necks {
                if neck.pinned.0 != m && neck.pinned.1 != m {
                    continue;
                }
                let (w0, w1, u) = neck.offsets(z);
                let (_, r1) = neck.profile.window();
                if u >= r1 * r1 {
                    continue;
                }
                if u < NECK_CORE_GUARD {
                    return Err(GeomError::ChartBoundary(
                        "point sits on a singular curve; the neck metric is undefined there"
                            .into(),
                    ));
                }
                let h2 = neck.profile.d2(u)?;
                let h3 = neck.profile.d3(u)?;
                let idx = [neck.pinned.0, neck.pinned.1];
                let w = [w0, w1];
                let wm = if m == neck.pinned.0 { w0 } else { w1 };
                let du = 2.0 * wm.re;
                for (bi, &i) in idx.iter().enumerate() {
                    for (bj, &j) in idx.iter().enumerate() {
                        let diag = if i == j { h2 * du } else { 0.0 };
                        let mut v = C64::new(diag, 0.0) + h3 * du * w[bi].conj() * w[bj];
                        if i == m {
                            v += h2 * w[bj];
                        }
                        if j == m {
                            v += h2 * w[bi].conj();
                        }
                        dg[(i, j)] += v;
                    }
                }
            }
        }
        Ok(dg)
    }
}

/// The discretized objective: ambient metric, calibration phase, and the
/// quadrature grid over the torus parameters.
#[derive(Debug, Clone)]
pub struct DefectModel {
    pub metric: AmbientMetric,
    pub theta: f64,
    pub grid: SampleGrid,
}

impl DefectModel {
    /// Flat model at the fiber calibration phase over the torus's grid.
    pub fn flat(torus: &DeformedTorus) -> DefectModel {
        DefectModel {
            metric: AmbientMetric::Flat,
            theta: std::f64::consts::FRAC_PI_2,
            grid: torus.default_grid(),
        }
    }
}

fn det3(j: &DMatrix<C64>) -> C64 {
    j[(0, 0)] * (j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)])
        - j[(0, 1)] * (j[(1, 0)] * j[(2, 2)] - j[(1, 2)] * j[(2, 0)])
        + j[(0, 2)] * (j[(1, 0)] * j[(2, 1)] - j[(1, 1)] * j[(2, 0)])
}

/// adj(J) with adj[(a, j)] = d det / d J[(j, a)].
fn adj3(j: &DMatrix<C64>) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(3, 3);
    for row in 0..3 {
        for col in 0..3 {
            let r = [(row + 1) % 3, (row + 2) % 3];
            let c = [(col + 1) % 3, (col + 2) % 3];
            let minor = j[(r[0], c[0])] * j[(r[1], c[1])] - j[(r[0], c[1])] * j[(r[1], c[0])];
            a[(col, row)] = minor;
        }
    }
    a
}

struct PointDefect {
    w: DMatrix<f64>,
    im_v: f64,
    energy: f64,
}

fn point_defect(j: &DMatrix<C64>, g: &DMatrix<C64>, rot: C64) -> PointDefect {
    let m = j.transpose() * g * j.map(|z| z.conj());
    let w = DMatrix::from_fn(3, 3, |a, b| -2.0 * m[(a, b)].im);
    let im_v = (rot * det3(j)).im;
    let energy = w.iter().map(|x| x * x).sum::<f64>() + im_v * im_v;
    PointDefect { w, im_v, energy }
}

/// Discretized calibration defect of the deformed torus.
pub fn defect_energy(torus: &DeformedTorus, model: &DefectModel) -> Result<f64> {
    let rot = C64::new(0.0, model.theta).exp();
    let weight = model.grid.cell_weight();
    let mut total = 0.0;
    for t in model.grid.points() {
        let z = torus.point(&t)?;
        let j = torus.jacobian(&t)?;
        let g = model.metric.metric(&z)?;
        total += point_defect(&j, &g, rot).energy * weight;
    }
    Ok(total)
}

/// Flat-metric quadrature oracle for `defect_energy`, written against
/// coordinate two-form minors and a Laplace expansion instead of Gram
/// matrices. Intentionally a separate code path.
pub fn defect_energy_oracle(torus: &DeformedTorus, model: &DefectModel) -> Result<f64> {
    if !matches!(model.metric, AmbientMetric::Flat) {
        return Err(GeomError::Domain(
            "the quadrature oracle is defined for the flat metric only".into(),
        ));
    }
    let weight = model.grid.cell_weight();
    let (ct, st) = (model.theta.cos(), model.theta.sin());
    let mut total = 0.0;
    for t in model.grid.points() {
        let j = torus.jacobian(&t)?;
        // omega = 2 sum_j dx_j ^ dy_j pulled back through the columns.
        let mut wsq = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut v = 0.0;
                for row in 0..3 {
                    v += j[(row, a)].re * j[(row, b)].im - j[(row, b)].re * j[(row, a)].im;
                }
                wsq += (2.0 * v) * (2.0 * v);
            }
        }
        // Laplace expansion along the first row.
        let mut det = C64::new(0.0, 0.0);
        for (col, sign) in [(0usize, 1.0), (1, -1.0), (2, 1.0)] {
            let c = [(col + 1) % 3, (col + 2) % 3];
            let (c0, c1) = (c[0].min(c[1]), c[0].max(c[1]));
            let minor = j[(1, c0)] * j[(2, c1)] - j[(1, c1)] * j[(2, c0)];
            det += sign * j[(0, col)] * minor;
        }
        let im_v = ct * det.im + st * det.re;
        total += (wsq + im_v * im_v) * weight;
    }
    Ok(total)
}

/// Analytic adjoint gradient of `defect_energy` with respect to the
/// Fourier coefficients, shape 3 x len(). Differentiates through the
/// Jacobian entries of the deformation and, for glued metrics, through
/// the position dependence of the metric.
pub fn defect_gradient(torus: &DeformedTorus, model: &DefectModel) -> Result<DMatrix<f64>> {
    let n = torus.basis.len();
    let rot = C64::new(0.0, model.theta).exp();
    let weight = model.grid.cell_weight();
    let mut grad = DMatrix::zeros(3, n);
    let mut vals = vec![0.0; n];
    let mut grads = vec![0.0; 3 * n];
    for t in model.grid.points() {
        let t3 = [t[0], t[1], t[2]];
        torus.basis.eval(&t3, &mut vals, &mut grads);
        let z = torus.point(&t)?;
        let j = torus.jacobian(&t)?;
        let g = model.metric.metric(&z)?;
        let pd = point_defect(&j, &g, rot);
        let jc = j.map(|x| x.conj());
        let a = &g * &jc;
        let b = j.transpose() * &g;
        let adj = adj3(&j);
        // Sensitivity to a real increment of J[(row, alpha)].
        let mut tj = [[0.0; 3]; 3];
        for row in 0..3 {
            for alpha in 0..3 {
                let mut s = 0.0;
                for gamma in 0..3 {
                    s += pd.w[(alpha, gamma)] * a[(row, gamma)].im;
                    s += pd.w[(gamma, alpha)] * b[(gamma, row)].im;
                }
                tj[row][alpha] = -4.0 * s + 2.0 * pd.im_v * (rot * adj[(alpha, row)]).im;
            }
        }
        // Sensitivity to a real increment of the position x_m.
        let mut tx = [0.0; 3];
        if !matches!(model.metric, AmbientMetric::Flat) {
            for (m, slot) in tx.iter_mut().enumerate() {
                let dg = model.metric.metric_dx(&z, m)?;
                if dg.iter().all(|v| v.norm_sqr() == 0.0) {
                    continue;
                }
                let dm = j.transpose() * dg * &jc;
                let mut s = 0.0;
                for alpha in 0..3 {
                    for beta in 0..3 {
                        s += pd.w[(alpha, beta)] * dm[(alpha, beta)].im;
                    }
                }
                *slot = -4.0 * s;
            }
        }
        for d in 0..3 {
            for mu in 0..n {
                let mut inc = tx[d] * vals[mu];
                for alpha in 0..3 {
                    inc += tj[d][alpha] * grads[3 * mu + alpha];
                }
                grad[(d, mu)] += weight * inc;
            }
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Energy fell below the tolerance.
    Converged,
    /// Relative decrease stayed under 1e-12 for 20 iterations, or the
    /// line search could not find a descent step.
    Stalled,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub torus: DeformedTorus,
    /// Energy after each accepted step; history[0] is the initial energy.
    pub history: Vec<f64>,
    pub status: StopReason,
    /// How the inner derivatives were obtained; recorded in reports.
    pub gradient_mode: &'static str,
}

/// Gradient descent with backtracking on the defect energy. The history
/// is monotone non-increasing by construction of the line search.
pub fn minimize_defect(
    torus0: &DeformedTorus,
    model: &DefectModel,
    tol: f64,
    max_iter: usize,
) -> Result<MinimizeOutcome> {
    let mut torus = torus0.clone();
    let mut energy = defect_energy(&torus, model)?;
    if !energy.is_finite() {
        return Err(GeomError::Optimizer("initial defect energy is not finite".into()));
    }
    let mut history = vec![energy];
    if energy < tol {
        return Ok(MinimizeOutcome {
            torus,
            history,
            status: StopReason::Converged,
            gradient_mode: "analytic-adjoint",
        });
    }
    let mut step = 1.0;
    let mut stall_count = 0usize;
    let mut status = StopReason::MaxIter;
    for _ in 0..max_iter {
        let grad = defect_gradient(&torus, model)?;
        let gnorm_sq: f64 = grad.iter().map(|x| x * x).sum();
        if gnorm_sq == 0.0 {
            status = StopReason::Stalled;
            break;
        }
        let mut accepted = false;
        let mut t = step;
        for _ in 0..40 {
            let trial_coeffs = torus.coeffs() - &grad * t;
            if displacement_bound(&trial_coeffs) > DEFORMATION_GUARD {
                t *= 0.5;
                continue;
            }
            let trial = torus.clone().with_coeffs(trial_coeffs)?;
            let trial_energy = defect_energy(&trial, model)?;
            if trial_energy <= energy - 1e-4 * t * gnorm_sq {
                let rel_drop = (energy - trial_energy) / energy.max(f64::MIN_POSITIVE);
                torus = trial;
                energy = trial_energy;
                history.push(energy);
                step = (t * 1.5).min(1e3);
                accepted = true;
                if rel_drop < 1e-12 {
                    stall_count += 1;
                } else {
                    stall_count = 0;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            status = StopReason::Stalled;
            break;
        }
        if energy < tol {
            status = StopReason::Converged;
            break;
        }
        if stall_count >= 20 {
            status = StopReason::Stalled;
            break;
        }
    }
    Ok(MinimizeOutcome {
        torus,
        history,
        status,
        gradient_mode: "analytic-adjoint",
    })
}

/// The capped fiber through four singular curves: outside the collars it
/// is the flat fiber with the chosen second coordinate, inside each collar
/// the normal plane is reparametrized by the resolved radial profile,
/// blended with the quintic cutoff. Small disks at the curve points are
/// excised (the resolved piece continues onto the exceptional set, which
/// this chart does not see).
#[derive(Debug, Clone)]
pub struct SurgeredTorus {
    beta_hat: f64,
    a: f64,
    collar: Cutoff,
    cut_radius: f64,
    eh: EguchiHanson,
    /// gamma(r1) = r1 exactly: the cap is anchored at the outer collar.
    anchor: f64,
}

impl SurgeredTorus {
    /// Resolved radial parametrization of the cap, anchored to the flat
    /// one at the outer collar radius.
    fn cap_radius(&self, r: f64) -> Result<f64> {
        let (_, r1) = self.collar.window();
        Ok(r + (self.eh.flat_gap(r * r)? - self.anchor) / (2.0 * r1))
    }

    fn blended_radius(&self, r: f64) -> Result<f64> {
        let (r0, r1) = self.collar.window();
        if r >= r1 {
            return Ok(r);
        }
        if r <= r0 {
            return self.cap_radius(r);
        }
        let chi = self.collar.value(r);
        Ok(chi * r + (1.0 - chi) * self.cap_radius(r)?)
    }

    pub fn beta_hat(&self) -> f64 {
        self.beta_hat
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn cut_radius(&self) -> f64 {
        self.cut_radius
    }

    /// Offset of (t1, t3) from the nearest curve point in {0, 1/2}^2.
    fn normal_offset(t1: f64, t3: f64) -> ([f64; 2], [f64; 2]) {
        let p = [
            (t1 * 2.0).round() * 0.5,
            (t3 * 2.0).round() * 0.5,
        ];
        ([t1 - p[0], t3 - p[1]], p)
    }
}

impl ParamImmersion for SurgeredTorus {
    fn domain_dim(&self) -> usize {
        3
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn point(&self, t: &[f64]) -> Result<Vec<C64>> {
        if t.len() != 3 {
            return Err(GeomError::DimMismatch { expected: 3, got: t.len() });
        }
        let (u, p) = SurgeredTorus::normal_offset(t[0], t[2]);
        let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if r < self.cut_radius {
            return Err(GeomError::ChartBoundary(format!(
                "parameter inside the excised disk (r = {r:.3e})"
            )));
        }
        let scale = self.blended_radius(r)? / r;
        Ok(vec![
            C64::new(0.0, p[0] + u[0] * scale),
            C64::new(self.beta_hat, t[1]),
            C64::new(0.0, p[1] + u[1] * scale),
        ])
    }

    fn jacobian(&self, t: &[f64]) -> Result<DMatrix<C64>> {
        if t.len() != 3 {
            return Err(GeomError::DimMismatch { expected: 3, got: t.len() });
        }
        let (u, _) = SurgeredTorus::normal_offset(t[0], t[2]);
        let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if r < self.cut_radius {
            return Err(GeomError::ChartBoundary(format!(
                "parameter inside the excised disk (r = {r:.3e})"
            )));
        }
        let rho = self.blended_radius(r)?;
        // d(rho)/dr by the same ladder the map uses.
        let (r0, r1) = self.collar.window();
        let drho = if r >= r1 {
            1.0
        } else {
            let gamma_d = 1.0 + r * (self.eh.d1(r * r)? - 1.0) / r1;
            if r <= r0 {
                gamma_d
            } else {
                let chi = self.collar.value(r);
                let dchi = self.collar.d1(r);
                let gamma = self.cap_radius(r)?;
                chi + dchi * (r - gamma) + (1.0 - chi) * gamma_d
            }
        };
        // v_i = u_i rho(r)/r: dv_i/du_k = rho/r delta + u_i u_k (rho' r - rho)/r^3.
        let s = rho / r;
        let q = (drho * r - rho) / (r * r * r);
        let mut j = DMatrix::zeros(3, 3);
        let axes = [0usize, 2];
        for (bi, &row) in axes.iter().enumerate() {
            for (bk, &col) in axes.iter().enumerate() {
                let v = if bi == bk { s } else { 0.0 } + u[bi] * u[bk] * q;
                j[(row, col)] = C64::new(0.0, v);
            }
        }
        j[(1, 1)] = C64::new(0.0, 1.0);
        Ok(j)
    }

    fn default_grid(&self) -> SampleGrid {
        SampleGrid::new(vec![0.0; 3], vec![1.0; 3], vec![16, 4, 16])
            .expect("static grid is valid")
    }
}

/// Construction diagnostics. The defect numbers are measurements, not
/// claims: whether this candidate converges to an exact special
/// Lagrangian is open in the sources.
#[derive(Debug, Clone)]
pub struct SurgeredReport {
    /// sup over boundary circles of |blended map - pure piece|.
    pub collar_mismatch: f64,
    /// sup over the collar of the cap-vs-flat radial discrepancy; the
    /// O(a^2) quantity the a-sweep watches.
    pub collar_stretch: f64,
    pub energy_total: f64,
    pub energy_collar: f64,
    pub energy_far: f64,
    pub grid_cells: usize,
    pub skipped_cells: usize,
    pub note: &'static str,
}

/// Builds the capped fiber and measures its diagnostics under the glued
/// metric with the four adjacent necks (the remaining necks are exactly
/// inactive on its image). beta values meeting the other involution's
/// curves are rejected.
pub fn build_surgered_torus(
    beta_hat: f64,
    a: f64,
    collar: (f64, f64),
) -> Result<(SurgeredTorus, SurgeredReport)> {
    let frac = beta_hat.rem_euclid(1.0);
    if (frac - 0.25).abs() < 1e-9 || (frac - 0.75).abs() < 1e-9 {
        return Err(GeomError::Domain(format!(
            "beta = {beta_hat} lies on the other involution's fixed curves"
        )));
    }
    let (c0, c1) = collar;
    if !(0.0 < c0 && c0 < c1 && c1 <= 0.24) {
        return Err(GeomError::Config(format!(
            "collar radii need 0 < r0 < r1 <= 0.24 (separation of the four curve points), got ({c0}, {c1})"
        )));
    }
    let eh = EguchiHanson::new(a)?;
    let anchor = eh.flat_gap(c1 * c1)?;
    let torus = SurgeredTorus {
        beta_hat,
        a,
        collar: Cutoff::new(c0, c1)?,
        cut_radius: 0.5 * c0,
        eh,
        anchor,
    };

    // Boundary agreement of the blend with the pure pieces.
    let mut mismatch = 0.0_f64;
    for k in 0..16 {
        let r_inner = c0;
        let r_outer = c1;
        let ang = std::f64::consts::TAU * k as f64 / 16.0;
        for (r, pure) in [
            (r_inner, torus.cap_radius(r_inner)?),
            (r_outer, r_outer),
        ] {
            let blend = torus.blended_radius(r)?;
            let _ = ang;
            mismatch = mismatch.max((blend - pure).abs());
        }
    }
    if mismatch > 1e-3 {
        return Err(GeomError::Surgery(format!(
            "collar boundary mismatch {mismatch:.3e} exceeds 1e-3"
        )));
    }

    let mut stretch = 0.0_f64;
    for k in 0..=64 {
        let r = c0 + (c1 - c0) * k as f64 / 64.0;
        stretch = stretch.max((torus.cap_radius(r)? - r).abs());
    }

    // Defect energy under the four adjacent glued necks.
    let profile = GluedProfile::new(0.5 * c0, 0.5 * c1, a)?;
    let half = C64::new(0.0, 0.5);
    let zero = C64::new(0.0, 0.0);
    let necks = vec![
        MetricNeck { pinned: (0, 2), center: (zero, zero), profile },
        MetricNeck { pinned: (0, 2), center: (zero, half), profile },
        MetricNeck { pinned: (0, 2), center: (half, zero), profile },
        MetricNeck { pinned: (0, 2), center: (half, half), profile },
    ];
    let metric = AmbientMetric::GluedNecks { necks };
    let rot = C64::new(0.0, std::f64::consts::FRAC_PI_2).exp();
    let grid = torus.default_grid();
    let weight = grid.cell_weight();
    let mut energy_total = 0.0;
    let mut energy_collar = 0.0;
    let mut energy_far = 0.0;
    let mut skipped = 0usize;
    for t in grid.points() {
        let (u, _) = SurgeredTorus::normal_offset(t[0], t[2]);
        let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if r < torus.cut_radius {
            skipped += 1;
            continue;
        }
        let z = torus.point(&t)?;
        let j = torus.jacobian(&t)?;
        let g = metric.metric(&z)?;
        let e = point_defect(&j, &g, rot).energy * weight;
        energy_total += e;
        if r < c1 {
            energy_collar += e;
        } else {
            energy_far += e;
        }
    }
    let report = SurgeredReport {
        collar_mismatch: mismatch,
        collar_stretch: stretch,
        energy_total,
        energy_collar,
        energy_far,
        grid_cells: grid.len(),
        skipped_cells: skipped,
        note: "this chart family keeps the capped fiber calibrated; whether the resolved candidate perturbs to an exact special Lagrangian is open",
    };
    Ok((torus, report))
}
