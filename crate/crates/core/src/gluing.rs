//! Glued approximately Ricci-flat metrics: a quintic cutoff interpolates
//! the Kahler potential between the Eguchi-Hanson profile near a singular
//! curve and the flat potential outside, per curve, with disjoint necks.
//!
//! The interpolation happens at the potential level. Inside radius r0 and
//! outside r1 the evaluation path returns the pure pieces, so equality
//! there is bit-level, not approximate. The annulus in between is where
//! all the Ricci defect lives, and the scaling probe measures how it
//! shrinks with the resolution parameter a.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::fd;
use crate::orbifold::{Orbifold, SingularSet};
use crate::potential::{KahlerPotential, RadialProfile, SplitRadialPotential};
use crate::profiles::EguchiHanson;
use crate::C64;

/// Quintic transition 6s^5 - 15s^4 + 10s^3 on [r0, r1]: C^2 with vanishing
/// first and second derivatives at both ends, and value 1/2 at the
/// midpoint. Clamped exactly outside the window.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    r0: f64,
    r1: f64,
}

impl Cutoff {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 < r1) || !r0.is_finite() || !r1.is_finite() {
            return Err(GeomError::Config(format!(
                "cutoff window needs r0 < r1, got [{r0}, {r1}]"
            )));
        }
        Ok(Cutoff { r0, r1 })
    }

    pub fn window(&self) -> (f64, f64) {
        (self.r0, self.r1)
    }

    fn s(&self, r: f64) -> f64 {
        (r - self.r0) / (self.r1 - self.r0)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r0 {
            return 0.0;
        }
        if r >= self.r1 {
            return 1.0;
        }
        let s = self.s(r);
        ((6.0 * s - 15.0) * s + 10.0) * s * s * s
    }

    /// d(chi)/dr; zero outside the window.
    pub fn d1(&self, r: f64) -> f64 {
        if r <= self.r0 || r >= self.r1 {
            return 0.0;
        }
        let s = self.s(r);
        let ds = 30.0 * s * s * (s - 1.0) * (s - 1.0);
        ds / (self.r1 - self.r0)
    }

    pub fn d2(&self, r: f64) -> f64 {
        if r <= self.r0 || r >= self.r1 {
            return 0.0;
        }
        let s = self.s(r);
        let dss = 60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
        dss / ((self.r1 - self.r0) * (self.r1 - self.r0))
    }

    pub fn d3(&self, r: f64) -> f64 {
        if r <= self.r0 || r >= self.r1 {
            return 0.0;
        }
        let s = self.s(r);
        let dsss = (360.0 * s - 360.0) * s + 60.0;
        let d = self.r1 - self.r0;
        dsss / (d * d * d)
    }
}

/// Per-neck gluing data: the annulus window in normal distance sqrt(U)
/// and one resolution parameter per singular-curve class.
#[derive(Debug, Clone)]
pub struct NeckConfig {
    pub r0: f64,
    pub r1: f64,
    /// One parameter per class (16 classes on the default orbifold).
    pub a: Vec<f64>,
}

impl NeckConfig {
    /// Same parameter on every neck.
    pub fn uniform(r0: f64, r1: f64, a: f64) -> Result<Self> {
        NeckConfig::new(r0, r1, vec![a; 16])
    }

    pub fn new(r0: f64, r1: f64, a: Vec<f64>) -> Result<Self> {
        if !(0.0 < r0 && r0 < r1) {
            return Err(GeomError::Config(format!(
                "neck radii need 0 < r0 < r1, got ({r0}, {r1})"
            )));
        }
        if a.is_empty() || a.iter().any(|&ak| !(ak > 0.0)) {
            return Err(GeomError::Config(
                "every neck parameter a_k must be positive".into(),
            ));
        }
        Ok(NeckConfig { r0, r1, a })
    }

    /// Advisory notes for parameters large enough to distort the annulus.
    pub fn warnings(&self) -> Vec<String> {
        self.a
            .iter()
            .enumerate()
            .filter(|(_, &ak)| ak > self.r0 / 4.0)
            .map(|(k, &ak)| {
                format!(
                    "neck {k}: a = {ak} exceeds r0/4 = {}; the profile is far from flat at the inner seam",
                    self.r0 / 4.0
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum InnerProfile {
    /// Formal a = 0 limit; the blend interpolates identical potentials.
    Flat,
    Eh(EguchiHanson),
}

impl InnerProfile {
    fn value(&self, u: f64) -> Result<f64> {
        match self {
            InnerProfile::Flat => Ok(u),
            InnerProfile::Eh(eh) => eh.value(u),
        }
    }
    fn d1(&self, u: f64) -> Result<f64> {
        match self {
            InnerProfile::Flat => Ok(1.0),
            InnerProfile::Eh(eh) => eh.d1(u),
        }
    }
    fn d2(&self, u: f64) -> Result<f64> {
        match self {
            InnerProfile::Flat => Ok(0.0),
            InnerProfile::Eh(eh) => eh.d2(u),
        }
    }
    fn d3(&self, u: f64) -> Result<f64> {
        match self {
            InnerProfile::Flat => Ok(0.0),
            InnerProfile::Eh(eh) => eh.d3(u),
        }
    }
}

/// H(U) = chi(r) U + (1 - chi(r)) f_a(U) with r = sqrt(U): Eguchi-Hanson
/// inside r0, flat outside r1, quintic blend between. The derivative
/// ladder is exact (chain rule through r), so metric and Ricci pipelines
/// treat this profile like any closed-form one.
#[derive(Debug, Clone, Copy)]
pub struct GluedProfile {
    cutoff: Cutoff,
    inner: InnerProfile,
    a: f64,
}

impl GluedProfile {
    pub fn new(r0: f64, r1: f64, a: f64) -> Result<Self> {
        let cutoff = Cutoff::new(r0, r1)?;
        if r0 <= 0.0 {
            return Err(GeomError::Config("inner radius must be positive".into()));
        }
        let inner = if a == 0.0 {
            InnerProfile::Flat
        } else {
            InnerProfile::Eh(EguchiHanson::new(a)?)
        };
        Ok(GluedProfile { cutoff, inner, a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn window(&self) -> (f64, f64) {
        self.cutoff.window()
    }

    /// chi and its first three U-derivatives at U, through r = sqrt(U).
    fn chi_ladder(&self, u: f64) -> (f64, f64, f64, f64) {
        let r = u.sqrt();
        let (c, cr, crr, crrr) = (
            self.cutoff.value(r),
            self.cutoff.d1(r),
            self.cutoff.d2(r),
            self.cutoff.d3(r),
        );
        let ru = 0.5 / r;
        let ruu = -0.25 / (r * r * r);
        let ruuu = 0.375 / (r * r * r * r * r);
        let cu = cr * ru;
        let cuu = crr * ru * ru + cr * ruu;
        let cuuu = crrr * ru * ru * ru + 3.0 * crr * ru * ruu + cr * ruuu;
        (c, cu, cuu, cuuu)
    }
}

impl RadialProfile for GluedProfile {
    fn value(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(GeomError::Domain(format!("radius U must be positive, got {u}")));
        }
        let (r0, r1) = self.cutoff.window();
        let r = u.sqrt();
        if r <= r0 {
            return self.inner.value(u);
        }
        if r >= r1 {
            return Ok(u);
        }
        let c = self.cutoff.value(r);
        Ok(c * u + (1.0 - c) * self.inner.value(u)?)
    }

    fn d1(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(GeomError::Domain(format!("radius U must be positive, got {u}")));
        }
        let (r0, r1) = self.cutoff.window();
        let r = u.sqrt();
        if r <= r0 {
            return self.inner.d1(u);
        }
        if r >= r1 {
            return Ok(1.0);
        }
        let (c, cu, _, _) = self.chi_ladder(u);
        let f = self.inner.value(u)?;
        let f1 = self.inner.d1(u)?;
        Ok(c + cu * (u - f) + (1.0 - c) * f1)
    }

    fn d2(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(GeomError::Domain(format!("radius U must be positive, got {u}")));
        }
        let (r0, r1) = self.cutoff.window();
        let r = u.sqrt();
        if r <= r0 {
            return self.inner.d2(u);
        }
        if r >= r1 {
            return Ok(0.0);
        }
        let (c, cu, cuu, _) = self.chi_ladder(u);
        let f = self.inner.value(u)?;
        let f1 = self.inner.d1(u)?;
        let f2 = self.inner.d2(u)?;
        Ok(2.0 * cu * (1.0 - f1) + cuu * (u - f) + (1.0 - c) * f2)
    }

    fn d3(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(GeomError::Domain(format!("radius U must be positive, got {u}")));
        }
        let (r0, r1) = self.cutoff.window();
        let r = u.sqrt();
        if r <= r0 {
            return self.inner.d3(u);
        }
        if r >= r1 {
            return Ok(0.0);
        }
        let (c, cu, cuu, cuuu) = self.chi_ladder(u);
        let f = self.inner.value(u)?;
        let f1 = self.inner.d1(u)?;
        let f2 = self.inner.d2(u)?;
        let f3 = self.inner.d3(u)?;
        Ok(3.0 * cuu * (1.0 - f1) - 3.0 * cu * f2 + cuuu * (u - f) + (1.0 - c) * f3)
    }
}

/// The neck chart potential H(U) + |w_3|^2 on C^3 with U = |w_1|^2 + |w_2|^2.
pub fn neck_potential(profile: GluedProfile) -> SplitRadialPotential<GluedProfile> {
    SplitRadialPotential::new(profile, 3, vec![0, 1]).expect("static index set is valid")
}

#[derive(Debug, Clone, Copy)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub positive: bool,
    /// Radius sqrt(U) where the minimum was attained.
    pub worst_radius: f64,
}

/// Minimum metric eigenvalue over a log-spaced radius scan covering
/// [r0/2, 1.5 r1]. The block eigenvalues of H' I + H'' wbar w (plus the
/// flat tail) are H' + U H'', H', and 1 in closed form; a finite sample
/// of full matrices cross-checks this in the tests.
pub fn glued_metric_positivity(profile: &GluedProfile, samples: usize) -> Result<PositivityReport> {
    let (r0, r1) = profile.window();
    let (lo, hi) = (0.5 * r0, 1.5 * r1);
    let n = samples.max(16);
    let mut min_eig = f64::INFINITY;
    let mut worst = lo;
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let r = lo * (hi / lo).powf(t);
        let u = r * r;
        let h1 = profile.d1(u)?;
        let h2 = profile.d2(u)?;
        let e = (h1 + u * h2).min(h1).min(1.0);
        if e < min_eig {
            min_eig = e;
            worst = r;
        }
    }
    Ok(PositivityReport {
        min_eigenvalue: min_eig,
        positive: min_eig > 0.0,
        worst_radius: worst,
    })
}

/// One region of the neck scan.
#[derive(Debug, Clone)]
pub struct RegionDefect {
    pub label: &'static str,
    /// sup over samples of the largest |entry| of the Ricci form.
    pub sup: f64,
    pub mean: f64,
    pub samples: usize,
}

fn ricci_entry_with_retry(
    phi: &dyn KahlerPotential,
    z: &[C64],
    h0: f64,
) -> Result<f64> {
    let mut h = h0;
    for _ in 0..3 {
        match fd::ricci_sup_entry(phi, z, h) {
            Ok(v) => return Ok(v),
            Err(_) => h *= 0.5,
        }
    }
    fd::ricci_sup_entry(phi, z, h)
}

/// Ricci defect by region: inside the annulus (pure Eguchi-Hanson, flat
/// in the Ricci sense), the blend annulus (where the defect lives), and
/// outside (exactly flat). Radii below r0/2 are excluded; the profile
/// is exact there and the FD stencil would fight the curvature scale.
pub fn ricci_defect_scan(profile: &GluedProfile, per_region: usize, seed: u64) -> Result<Vec<RegionDefect>> {
    let (r0, r1) = profile.window();
    let phi = neck_potential(*profile);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let regions: [(&'static str, f64, f64); 3] = [
        ("inside", 0.5 * r0, 0.97 * r0),
        ("annulus", 1.02 * r0, 0.98 * r1),
        ("outside", 1.03 * r1, 1.5 * r1),
    ];
    let mut out = Vec::with_capacity(3);
    for (label, lo, hi) in regions {
        let mut sup = 0.0_f64;
        let mut total = 0.0;
        let n = per_region.max(4);
        for _ in 0..n {
            let r = rng.random_range(lo..hi);
            let psi: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
            let ph1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let ph2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let z = [
                C64::from_polar(r * psi.cos(), ph1),
                C64::from_polar(r * psi.sin(), ph2),
                C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
            ];
            let v = ricci_entry_with_retry(&phi, &z, 2e-3)?;
            sup = sup.max(v);
            total += v;
        }
        out.push(RegionDefect { label, sup, mean: total / n as f64, samples: n });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub a_values: Vec<f64>,
    /// sup over the annulus of |f_a(U) - U| per a.
    pub potential_sup: Vec<f64>,
    /// sup Ricci defect over annulus samples per a.
    pub ricci_sup: Vec<f64>,
    pub potential_exponent: f64,
    pub ricci_exponent: f64,
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Fits the a-scaling of the neck discrepancy. The potential gap
/// |f_a(U) - U| has the closed leading term -a^2/(2U), so its exponent is
/// a sharp contract (2.0 +- 0.1); the Ricci defect exponent is measured
/// and only required to clear 1.5.
pub fn scaling_probe(r0: f64, r1: f64, a_values: &[f64], seed: u64) -> Result<ScalingReport> {
    if a_values.len() < 3 {
        return Err(GeomError::Domain(format!(
            "scaling fit needs at least 3 points, got {}",
            a_values.len()
        )));
    }
    let mut potential_sup = Vec::with_capacity(a_values.len());
    let mut ricci_sup = Vec::with_capacity(a_values.len());
    for &a in a_values {
        let eh = EguchiHanson::new(a)?;
        let mut sup = 0.0_f64;
        let n = 400;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let u = (r0 * r0) * ((r1 * r1) / (r0 * r0)).powf(t);
            sup = sup.max(eh.flat_gap(u)?.abs());
        }
        potential_sup.push(sup);

        let profile = GluedProfile::new(r0, r1, a)?;
        let scan = ricci_defect_scan(&profile, 12, seed)?;
        let annulus = scan
            .iter()
            .find(|r| r.label == "annulus")
            .expect("scan always contains the annulus region");
        ricci_sup.push(annulus.sup);
    }
    Ok(ScalingReport {
        potential_exponent: log_log_slope(a_values, &potential_sup),
        ricci_exponent: log_log_slope(a_values, &ricci_sup),
        a_values: a_values.to_vec(),
        potential_sup,
        ricci_sup,
    })
}

/// One glued neck in the product chart: a singular-curve class member with
/// its two pinned factor coordinates.
#[derive(Debug, Clone)]
pub struct NeckSite {
    /// Index into `SingularSet::upstairs`.
    pub curve: usize,
    /// Class the curve belongs to (shares its resolution parameter).
    pub class: usize,
    /// (factor index, pinned center) for the two normal directions.
    pub pinned: [(usize, C64); 2],
    pub free_factor: usize,
}

/// All necks of the assembled geometry. Valid only when the annuli cannot
/// meet: 2 r1 must stay below the minimum curve separation.
#[derive(Debug, Clone)]
pub struct NeckAtlas {
    pub sites: Vec<NeckSite>,
    pub r0: f64,
    pub r1: f64,
}

impl NeckAtlas {
    pub fn new(orb: &Orbifold, set: &SingularSet, r0: f64, r1: f64) -> Result<Self> {
        Cutoff::new(r0, r1)?;
        if 2.0 * r1 > set.min_pairwise_distance {
            return Err(GeomError::Surgery(format!(
                "neck radius {r1} too large: curves are {} apart, necks would meet",
                set.min_pairwise_distance
            )));
        }
        let taus = orb.taus();
        let mut sites = Vec::with_capacity(set.upstairs.len());
        for (idx, curve) in set.upstairs.iter().enumerate() {
            let class = set
                .classes
                .iter()
                .position(|c| c.contains(&idx))
                .ok_or_else(|| GeomError::Surgery(format!("curve {idx} not in any class")))?;
            let pinned = [
                (curve.pinned[0].0, curve.pinned[0].1.to_complex(taus[curve.pinned[0].0])),
                (curve.pinned[1].0, curve.pinned[1].1.to_complex(taus[curve.pinned[1].0])),
            ];
            sites.push(NeckSite { curve: idx, class, pinned, free_factor: curve.free_factor });
        }
        Ok(NeckAtlas { sites, r0, r1 })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric_from_potential;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Pairs (f, f') for derivative-ladder checks against finite differences.
    type Ladder = Vec<(Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>)>;

    #[test]
    fn cutoff_endpoints_and_midpoint() {
        let chi = Cutoff::new(0.5, 1.0).unwrap();
        assert_eq!(chi.value(0.5), 0.0);
        assert_eq!(chi.value(1.0), 1.0);
        assert_eq!(chi.value(0.2), 0.0);
        assert_eq!(chi.value(1.7), 1.0);
        assert_abs_diff_eq!(chi.value(0.75), 0.5, epsilon = 1e-15);
        for r in [0.5, 1.0] {
            assert!(chi.d1(r).abs() < 1e-14);
            assert!(chi.d2(r).abs() < 1e-14);
        }
        // One-sided limits of the derivative vanish quadratically: the
        // exact near-edge form is 30 s^2 / (r1 - r0) with s = eps / (r1 - r0).
        for eps in [1e-4, 1e-5] {
            let bound = 61.0 * (eps / 0.5) * (eps / 0.5) / 0.5;
            assert!(chi.d1(0.5 + eps) < bound);
            assert!(chi.d1(1.0 - eps) < bound);
        }
    }

    #[test]
    fn cutoff_rejects_bad_window() {
        assert!(Cutoff::new(1.0, 0.5).is_err());
        assert!(Cutoff::new(1.0, 1.0).is_err());
    }

    #[test]
    fn cutoff_derivative_ladder_matches_fd() {
        let chi = Cutoff::new(0.3, 0.9).unwrap();
        let ladder: Ladder = vec![
            (Box::new(move |r| chi.value(r)), Box::new(move |r| chi.d1(r))),
            (Box::new(move |r| chi.d1(r)), Box::new(move |r| chi.d2(r))),
            (Box::new(move |r| chi.d2(r)), Box::new(move |r| chi.d3(r))),
        ];
        for r in [0.35, 0.5, 0.6, 0.75, 0.85] {
            for (f, df) in &ladder {
                let h = 1e-6;
                let fd = (f(r + h) - f(r - h)) / (2.0 * h);
                assert_abs_diff_eq!(fd, df(r), epsilon = 1e-5 * df(r).abs().max(1.0));
            }
        }
    }

    #[test]
    fn glued_profile_is_bitwise_pure_outside_annulus() {
        let g = GluedProfile::new(0.5, 1.0, 0.01).unwrap();
        let eh = EguchiHanson::new(0.01).unwrap();
        for u in [0.01, 0.1, 0.2499, 0.25] {
            assert_eq!(g.value(u).unwrap().to_bits(), eh.value(u).unwrap().to_bits());
            assert_eq!(g.d1(u).unwrap().to_bits(), eh.d1(u).unwrap().to_bits());
            assert_eq!(g.d2(u).unwrap().to_bits(), eh.d2(u).unwrap().to_bits());
            assert_eq!(g.d3(u).unwrap().to_bits(), eh.d3(u).unwrap().to_bits());
        }
        for u in [1.0, 1.5, 9.0] {
            assert_eq!(g.value(u).unwrap().to_bits(), u.to_bits());
            assert_eq!(g.d1(u).unwrap(), 1.0);
            assert_eq!(g.d2(u).unwrap(), 0.0);
            assert_eq!(g.d3(u).unwrap(), 0.0);
        }
    }

    #[test]
    fn glued_profile_is_continuous_at_seams() {
        let g = GluedProfile::new(0.5, 1.0, 0.02).unwrap();
        for seam in [0.25, 1.0] {
            let below = g.value(seam - 1e-9).unwrap();
            let above = g.value(seam + 1e-9).unwrap();
            assert!((below - above).abs() < 1e-8);
            let d_below = g.d1(seam - 1e-9).unwrap();
            let d_above = g.d1(seam + 1e-9).unwrap();
            assert!((d_below - d_above).abs() < 1e-7);
        }
    }

    #[test]
    fn glued_profile_derivative_ladder_matches_fd() {
        let g = GluedProfile::new(0.4, 0.9, 0.05).unwrap();
        let ladder: Ladder = vec![
            (
                Box::new(move |u| g.value(u).unwrap()),
                Box::new(move |u| g.d1(u).unwrap()),
            ),
            (
                Box::new(move |u| g.d1(u).unwrap()),
                Box::new(move |u| g.d2(u).unwrap()),
            ),
            (
                Box::new(move |u| g.d2(u).unwrap()),
                Box::new(move |u| g.d3(u).unwrap()),
            ),
        ];
        // Inside, four annulus points, outside.
        for u in [0.09f64, 0.2, 0.3, 0.5, 0.7, 1.2] {
            for (f, df) in &ladder {
                let h = 1e-6 * u.max(0.1);
                let fd = (f(u + h) - f(u - h)) / (2.0 * h);
                assert_abs_diff_eq!(fd, df(u), epsilon = 1e-4 * df(u).abs().max(1.0));
            }
        }
    }

    #[test]
    fn positivity_local_model() {
        let g = GluedProfile::new(0.5, 1.0, 0.01).unwrap();
        let rep = glued_metric_positivity(&g, 256).unwrap();
        assert!(rep.positive);
        assert!(rep.min_eigenvalue > 0.9, "min eig {}", rep.min_eigenvalue);
        // The soft direction is the radial one at the inner scan edge.
        assert!(rep.worst_radius < 0.3);
    }

    #[test]
    fn positivity_formal_zero_parameter() {
        let g = GluedProfile::new(0.5, 1.0, 0.0).unwrap();
        let rep = glued_metric_positivity(&g, 128).unwrap();
        assert_eq!(rep.min_eigenvalue, 1.0);
        for u in [0.1, 0.4, 0.8, 2.0] {
            assert_eq!(g.value(u).unwrap(), u);
            assert_eq!(g.d1(u).unwrap(), 1.0);
        }
    }

    #[test]
    fn positivity_degrades_for_abusive_parameter() {
        let small = glued_metric_positivity(&GluedProfile::new(0.5, 1.0, 0.01).unwrap(), 256).unwrap();
        let large = glued_metric_positivity(&GluedProfile::new(0.5, 1.0, 0.5).unwrap(), 256).unwrap();
        assert!(large.min_eigenvalue < small.min_eigenvalue);
        assert!(large.min_eigenvalue < 0.5, "min eig {}", large.min_eigenvalue);
    }

    #[test]
    fn analytic_eigenvalues_match_full_metric() {
        let g = GluedProfile::new(0.5, 1.0, 0.05).unwrap();
        let phi = neck_potential(g);
        for (r, ang) in [(0.3, 0.2), (0.55, 1.1), (0.7, 2.0), (1.2, 0.5)] {
            let u = r * r;
            let z = [
                C64::from_polar(r * 0.6_f64.cos(), ang),
                C64::from_polar(r * 0.6_f64.sin(), -0.4),
                C64::new(0.3, -0.2),
            ];
            let m = metric_from_potential(&phi, &z).unwrap();
            let eigs = m.eigenvalues();
            let h1 = g.d1(u).unwrap();
            let h2 = g.d2(u).unwrap();
            let mut expect = [h1 + u * h2, h1, 1.0];
            let mut got = eigs;
            expect.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            for (e, o) in expect.iter().zip(&got) {
                assert_abs_diff_eq!(e, o, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ricci_defect_lives_in_the_annulus() {
        let g = GluedProfile::new(0.5, 1.0, 0.02).unwrap();
        let scan = ricci_defect_scan(&g, 16, 7).unwrap();
        let inside = &scan[0];
        let annulus = &scan[1];
        let outside = &scan[2];
        assert_eq!(inside.label, "inside");
        assert!(inside.sup < 1e-8, "inside sup {}", inside.sup);
        assert!(annulus.sup > 1e-4, "annulus sup {}", annulus.sup);
        assert!(outside.sup < 1e-8, "outside sup {}", outside.sup);
    }

    #[test]
    fn ricci_defect_decreases_with_a() {
        let mut prev = f64::INFINITY;
        for a in [0.04, 0.02, 0.01] {
            let g = GluedProfile::new(0.5, 1.0, a).unwrap();
            let scan = ricci_defect_scan(&g, 12, 3).unwrap();
            let sup = scan[1].sup;
            assert!(sup < prev, "a = {a}: {sup} vs {prev}");
            prev = sup;
        }
    }

    #[test]
    fn scaling_probe_examples() {
        // |f_a(1) - 1| ~ a^2/2 with ratio 4 per halving.
        let eh1 = EguchiHanson::new(0.1).unwrap();
        let eh2 = EguchiHanson::new(0.05).unwrap();
        let g1 = eh1.flat_gap(1.0).unwrap().abs();
        let g2 = eh2.flat_gap(1.0).unwrap().abs();
        assert!((g1 - 5.0e-3).abs() < 0.02 * 5.0e-3, "gap {g1}");
        assert!((g2 - 1.25e-3).abs() < 0.02 * 1.25e-3, "gap {g2}");
        let ratio = g1 / g2;
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");

        let rep = scaling_probe(0.5, 1.0, &[0.1, 0.05, 0.025, 0.0125], 5).unwrap();
        assert!(
            (rep.potential_exponent - 2.0).abs() < 0.05,
            "potential exponent {}",
            rep.potential_exponent
        );
        assert!(rep.ricci_exponent >= 1.5, "ricci exponent {}", rep.ricci_exponent);
        // Monotone sups in both columns.
        for w in rep.potential_sup.windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in rep.ricci_sup.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn scaling_probe_needs_three_points() {
        assert!(scaling_probe(0.5, 1.0, &[0.1, 0.05], 1).is_err());
    }

    #[test]
    fn potential_gap_bound_holds() {
        // sup_annulus |f_a - U| <= 1.2 a^2/(2 r0^2) for a <= r0/10.
        for (r0, r1) in [(0.5, 1.0), (0.12, 0.3)] {
            for frac in [0.1, 0.05, 0.02] {
                let a = r0 * frac;
                let rep = scaling_probe(r0, r1, &[a, a * 0.5, a * 0.25], 2).unwrap();
                let bound = 1.2 * a * a / (2.0 * r0 * r0);
                assert!(
                    rep.potential_sup[0] <= bound,
                    "r0 = {r0}, a = {a}: sup {} > bound {bound}",
                    rep.potential_sup[0]
                );
            }
        }
    }

    #[test]
    fn neck_config_validation_and_warnings() {
        assert!(NeckConfig::uniform(0.5, 1.0, 0.01).is_ok());
        assert!(NeckConfig::uniform(1.0, 0.5, 0.01).is_err());
        assert!(NeckConfig::uniform(0.5, 1.0, 0.0).is_err());
        assert!(NeckConfig::uniform(0.5, 1.0, 0.01).unwrap().warnings().is_empty());
        let loud = NeckConfig::uniform(0.5, 1.0, 0.2).unwrap();
        assert_eq!(loud.warnings().len(), 16);
    }

    #[test]
    fn atlas_requires_separated_necks() {
        let orb = Orbifold::default();
        let set = orb.singular_set().unwrap();
        let atlas = NeckAtlas::new(&orb, &set, 0.04, 0.10).unwrap();
        assert_eq!(atlas.len(), 32);
        // Every class appears exactly twice.
        let mut counts = [0usize; 16];
        for site in &atlas.sites {
            counts[site.class] += 1;
        }
        assert!(counts.iter().all(|&c| c == 2));
        // 2 * 0.13 exceeds the 0.25 separation.
        assert!(matches!(
            NeckAtlas::new(&orb, &set, 0.05, 0.13),
            Err(GeomError::Surgery(_))
        ));
    }

    proptest! {
        #[test]
        fn cutoff_is_monotone_unit_range(r in 0.0f64..2.0) {
            let chi = Cutoff::new(0.5, 1.0).unwrap();
            let v = chi.value(r);
            prop_assert!((0.0..=1.0).contains(&v));
            let v2 = chi.value(r + 1e-3);
            prop_assert!(v2 >= v);
        }

        #[test]
        fn glued_d1_matches_fd_everywhere(u in 0.05f64..2.0) {
            let g = GluedProfile::new(0.4, 0.9, 0.03).unwrap();
            let h = 1e-6;
            let fd = (g.value(u + h).unwrap() - g.value(u - h).unwrap()) / (2.0 * h);
            let d1 = g.d1(u).unwrap();
            prop_assert!((fd - d1).abs() < 1e-4 * d1.abs().max(1.0));
        }
    }
}
