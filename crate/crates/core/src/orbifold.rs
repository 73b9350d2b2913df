//! Flat orbifold bookkeeping for a product of three elliptic curves modulo
//! a pair of commuting involutions.
//!
//! Everything combinatorial here is exact: fixed points of the involutions
//! and all curve identifications live on the quarter lattice of each factor,
//! so fixed-locus membership, disjointness, and orbit grouping are integer
//! computations. Floating point enters only through distances (fiber-to-curve
//! proximity and the pairwise curve separation certificate).

use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::immersion::TorusFiber;

/// Exact point on the quarter lattice (re + im*tau)/4, components mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuarterPoint {
    re: u8,
    im: u8,
}

impl QuarterPoint {
    pub fn new(re: u8, im: u8) -> Self {
        QuarterPoint { re: re % 4, im: im % 4 }
    }

    pub const ZERO: QuarterPoint = QuarterPoint { re: 0, im: 0 };
    /// The half period 1/2.
    pub const HALF: QuarterPoint = QuarterPoint { re: 2, im: 0 };

    /// Halve the point, staying on the quarter lattice. Only defined when
    /// both components are even (half-lattice points), which covers every
    /// shift appearing in the configured actions.
    pub fn half(self) -> Option<Self> {
        if self.re.is_multiple_of(2) && self.im.is_multiple_of(2) {
            Some(QuarterPoint::new(self.re / 2, self.im / 2))
        } else {
            None
        }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn to_complex(self, tau: Complex64) -> Complex64 {
        (Complex64::new(f64::from(self.re), 0.0) + tau * f64::from(self.im)) * 0.25
    }

    /// The four half-lattice points 0, 1/2, tau/2, (1+tau)/2.
    pub fn half_lattice() -> [QuarterPoint; 4] {
        [
            QuarterPoint::new(0, 0),
            QuarterPoint::new(2, 0),
            QuarterPoint::new(0, 2),
            QuarterPoint::new(2, 2),
        ]
    }
}

impl std::ops::Neg for QuarterPoint {
    type Output = QuarterPoint;

    fn neg(self) -> QuarterPoint {
        QuarterPoint::new((4 - self.re) % 4, (4 - self.im) % 4)
    }
}

impl std::ops::Add for QuarterPoint {
    type Output = QuarterPoint;

    fn add(self, other: QuarterPoint) -> QuarterPoint {
        QuarterPoint::new(self.re + other.re, self.im + other.im)
    }
}

impl std::ops::Sub for QuarterPoint {
    type Output = QuarterPoint;

    fn sub(self, other: QuarterPoint) -> QuarterPoint {
        self + (-other)
    }
}

/// One elliptic-curve factor C/(Z + Z tau).
#[derive(Debug, Clone, Copy)]
pub struct EllipticCurve {
    tau: Complex64,
}

impl EllipticCurve {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(GeomError::Domain(format!(
                "elliptic curve period must have positive imaginary part, got {tau}"
            )));
        }
        Ok(EllipticCurve { tau })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn is_pure_imaginary(&self) -> bool {
        self.tau.re == 0.0
    }

    /// Flat distance between two points modulo the lattice.
    ///
    /// The difference is expanded in the (1, tau) basis and each coefficient
    /// wrapped to [-1/2, 1/2). For rectangular lattices this is the exact
    /// nearest representative; for sheared lattices it is within one basis
    /// cell of it, which is enough for the zero/nonzero certificates here.
    pub fn distance(&self, z: Complex64, w: Complex64) -> f64 {
        let d = z - w;
        let b = d.im / self.tau.im;
        let a = d.re - b * self.tau.re;
        let a = a - a.round();
        let b = b - b.round();
        (Complex64::new(a, 0.0) + self.tau * b).norm()
    }
}

/// Affine factor map z -> sign*z + shift with a quarter-lattice shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorAction {
    pub sign: i8,
    pub shift: QuarterPoint,
}

impl FactorAction {
    pub fn identity() -> Self {
        FactorAction { sign: 1, shift: QuarterPoint::ZERO }
    }

    pub fn apply_exact(&self, p: QuarterPoint) -> QuarterPoint {
        let q = if self.sign >= 0 { p } else { -p };
        q + self.shift
    }

    pub fn apply(&self, z: Complex64, tau: Complex64) -> Complex64 {
        let s = if self.sign >= 0 { 1.0 } else { -1.0 };
        z * s + self.shift.to_complex(tau)
    }

    /// self after other: z -> self(other(z)).
    pub fn compose(&self, other: &FactorAction) -> FactorAction {
        let shift = if self.sign >= 0 { other.shift } else { -other.shift };
        FactorAction {
            sign: self.sign * other.sign,
            shift: shift + self.shift,
        }
    }

    fn is_identity(&self) -> bool {
        self.sign > 0 && self.shift.is_zero()
    }
}

/// Product action on the three factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupAction {
    pub factors: [FactorAction; 3],
}

impl GroupAction {
    /// First involution: reflects the first two factors about 1/4.
    pub fn alpha() -> Self {
        GroupAction {
            factors: [
                FactorAction { sign: -1, shift: QuarterPoint::HALF },
                FactorAction { sign: -1, shift: QuarterPoint::HALF },
                FactorAction::identity(),
            ],
        }
    }

    /// Second involution: reflects the outer factors about 0.
    pub fn beta() -> Self {
        GroupAction {
            factors: [
                FactorAction { sign: -1, shift: QuarterPoint::ZERO },
                FactorAction::identity(),
                FactorAction { sign: -1, shift: QuarterPoint::ZERO },
            ],
        }
    }

    pub fn identity() -> Self {
        GroupAction { factors: [FactorAction::identity(); 3] }
    }

    /// self after other.
    pub fn compose(&self, other: &GroupAction) -> GroupAction {
        GroupAction {
            factors: std::array::from_fn(|j| self.factors[j].compose(&other.factors[j])),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(FactorAction::is_identity)
    }

    pub fn is_involution(&self) -> bool {
        self.compose(self).is_identity()
    }

    pub fn apply(&self, z: &[Complex64; 3], taus: &[Complex64; 3]) -> [Complex64; 3] {
        [
            self.factors[0].apply(z[0], taus[0]),
            self.factors[1].apply(z[1], taus[1]),
            self.factors[2].apply(z[2], taus[2]),
        ]
    }
}

/// A fixed curve of one involution: one factor is free, the other two are
/// pinned at exact quarter-lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedCurve {
    pub free_factor: usize,
    /// (factor index, pinned point), sorted by factor index.
    pub pinned: [(usize, QuarterPoint); 2],
}

impl FixedCurve {
    pub fn pinned_at(&self, factor: usize) -> Option<QuarterPoint> {
        self.pinned.iter().find(|(j, _)| *j == factor).map(|(_, p)| *p)
    }

    /// Image under a factor-wise affine action; the free factor stays free.
    pub fn map(&self, action: &GroupAction) -> FixedCurve {
        let mut pinned = self.pinned;
        for (j, p) in pinned.iter_mut() {
            *p = action.factors[*j].apply_exact(*p);
        }
        FixedCurve { free_factor: self.free_factor, pinned }
    }

    /// Flat distance to the torus with fixed real parts `fiber_re` and free
    /// imaginary parts. Only the pinned factors contribute, and only through
    /// their real parts, since the fiber sweeps all imaginary values.
    /// Requires pure imaginary periods (real period is then exactly 1).
    pub fn distance_to_fiber(&self, fiber_re: &[f64; 3], taus: &[Complex64; 3]) -> f64 {
        let mut sum = 0.0;
        for &(j, p) in &self.pinned {
            let d = wrap_unit(p.to_complex(taus[j]).re - fiber_re[j]);
            sum += d * d;
        }
        sum.sqrt()
    }

    /// Flat distance between two fixed curves as subsets of the product.
    /// Factors where either curve is free impose no constraint.
    pub fn distance_to_curve(&self, other: &FixedCurve, factors: &[EllipticCurve; 3]) -> f64 {
        let mut sum = 0.0;
        for &(j, p) in &self.pinned {
            if let Some(q) = other.pinned_at(j) {
                let d =
                    factors[j].distance(p.to_complex(factors[j].tau()), q.to_complex(factors[j].tau()));
                sum += d * d;
            }
        }
        sum.sqrt()
    }

    /// Exact emptiness test for the intersection with another fixed curve.
    pub fn disjoint_from(&self, other: &FixedCurve) -> bool {
        self.pinned
            .iter()
            .any(|&(j, p)| other.pinned_at(j).is_some_and(|q| q != p))
    }
}

fn wrap_unit(x: f64) -> f64 {
    let y = x - x.round();
    y.abs()
}

/// Identification classes of the upstairs fixed curves in the quotient.
#[derive(Debug, Clone)]
pub struct SingularSet {
    /// All fixed curves of both involutions, alpha block first.
    pub upstairs: Vec<FixedCurve>,
    /// Orbit classes under the full group, as indices into `upstairs`.
    pub classes: Vec<Vec<usize>>,
    /// Minimum pairwise flat distance between distinct upstairs curves.
    pub min_pairwise_distance: f64,
}

impl SingularSet {
    pub fn representatives(&self) -> Vec<FixedCurve> {
        self.classes.iter().map(|c| self.upstairs[c[0]]).collect()
    }
}

/// The configured orbifold: three elliptic factors and the two involutions.
#[derive(Debug, Clone)]
pub struct Orbifold {
    factors: [EllipticCurve; 3],
}

impl Default for Orbifold {
    fn default() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Orbifold::new([i, i, i]).expect("square periods are valid")
    }
}

impl Orbifold {
    pub fn new(taus: [Complex64; 3]) -> Result<Self> {
        let factors = [
            EllipticCurve::new(taus[0])?,
            EllipticCurve::new(taus[1])?,
            EllipticCurve::new(taus[2])?,
        ];
        Ok(Orbifold { factors })
    }

    pub fn taus(&self) -> [Complex64; 3] {
        [self.factors[0].tau(), self.factors[1].tau(), self.factors[2].tau()]
    }

    pub fn factors(&self) -> &[EllipticCurve; 3] {
        &self.factors
    }

    pub fn all_pure_imaginary(&self) -> bool {
        self.factors.iter().all(EllipticCurve::is_pure_imaginary)
    }

    /// Fixed locus of a product action. A translation factor kills the whole
    /// locus; otherwise exactly one free factor must remain so the locus is a
    /// union of curves.
    pub fn fixed_locus(&self, action: &GroupAction) -> Result<Vec<FixedCurve>> {
        // Per-factor fixed sets: Free (whole curve), Points (four solutions
        // of 2z = shift), or empty for a nontrivial translation.
        enum Fixed {
            Free,
            Points([QuarterPoint; 4]),
        }
        let mut per_factor = Vec::with_capacity(3);
        for f in &action.factors {
            if f.sign > 0 {
                if f.shift.is_zero() {
                    per_factor.push(Fixed::Free);
                } else {
                    return Ok(Vec::new());
                }
            } else {
                let base = f.shift.half().ok_or_else(|| {
                    GeomError::Domain(
                        "reflection shift is not halvable on the quarter lattice".into(),
                    )
                })?;
                let mut pts = [QuarterPoint::ZERO; 4];
                for (p, h) in pts.iter_mut().zip(QuarterPoint::half_lattice()) {
                    *p = base + h;
                }
                per_factor.push(Fixed::Points(pts));
            }
        }

        let free: Vec<usize> = per_factor
            .iter()
            .enumerate()
            .filter_map(|(j, f)| matches!(f, Fixed::Free).then_some(j))
            .collect();
        if free.len() != 1 {
            return Err(GeomError::Domain(format!(
                "fixed locus is not a union of curves: {} free factors",
                free.len()
            )));
        }
        let free_factor = free[0];
        let pinned_idx: Vec<usize> = (0..3).filter(|j| *j != free_factor).collect();
        let pts = |j: usize| match &per_factor[j] {
            Fixed::Points(p) => *p,
            Fixed::Free => unreachable!("free factor excluded above"),
        };

        let mut curves = Vec::with_capacity(16);
        for p in pts(pinned_idx[0]) {
            for q in pts(pinned_idx[1]) {
                curves.push(FixedCurve {
                    free_factor,
                    pinned: [(pinned_idx[0], p), (pinned_idx[1], q)],
                });
            }
        }
        Ok(curves)
    }

    /// All upstairs fixed curves of both involutions, their disjointness
    /// certificate, and the identification classes in the quotient.
    pub fn singular_set(&self) -> Result<SingularSet> {
        let alpha = GroupAction::alpha();
        let beta = GroupAction::beta();
        let mut upstairs = self.fixed_locus(&alpha)?;
        upstairs.extend(self.fixed_locus(&beta)?);
        debug_assert!(self.fixed_locus(&alpha.compose(&beta))?.is_empty());

        // Exact pairwise disjointness plus the quantitative separation.
        let mut min_dist = f64::INFINITY;
        for i in 0..upstairs.len() {
            for j in (i + 1)..upstairs.len() {
                if !upstairs[i].disjoint_from(&upstairs[j]) {
                    return Err(GeomError::Domain(format!(
                        "upstairs fixed curves {i} and {j} intersect"
                    )));
                }
                min_dist = min_dist.min(upstairs[i].distance_to_curve(&upstairs[j], &self.factors));
            }
        }

        // Orbit classes under {id, alpha, beta, alpha beta}.
        let group = [
            GroupAction::identity(),
            alpha,
            beta,
            alpha.compose(&beta),
        ];
        let mut class_of = vec![usize::MAX; upstairs.len()];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..upstairs.len() {
            if class_of[i] != usize::MAX {
                continue;
            }
            let mut members = Vec::new();
            for g in &group {
                let image = upstairs[i].map(g);
                let k = upstairs
                    .iter()
                    .position(|c| *c == image)
                    .ok_or_else(|| GeomError::Domain("orbit leaves the fixed-curve set".into()))?;
                if !members.contains(&k) {
                    members.push(k);
                }
            }
            members.sort_unstable();
            for &k in &members {
                class_of[k] = classes.len();
            }
            classes.push(members);
        }

        Ok(SingularSet { upstairs, classes, min_pairwise_distance: min_dist })
    }

    /// The torus with fixed real parts and free imaginary parts in each
    /// factor. Requires pure imaginary periods so the real parts are
    /// globally defined coordinates.
    pub fn torus_fiber(&self, re: [f64; 3]) -> Result<TorusFiber> {
        if !self.all_pure_imaginary() {
            return Err(GeomError::Config(
                "torus fibers need pure imaginary periods".into(),
            ));
        }
        let periods = [
            self.factors[0].tau().im,
            self.factors[1].tau().im,
            self.factors[2].tau().im,
        ];
        TorusFiber::new(re, periods)
    }

    /// Distance-based genericity test: which identification classes does the
    /// torus with real parts `re` meet, at the given distance threshold?
    /// Returns the witnesses (closest member per intersected class).
    pub fn genericity(
        &self,
        re: [f64; 3],
        tol: f64,
        singular: &SingularSet,
    ) -> Result<(bool, Vec<FixedCurve>)> {
        if !self.all_pure_imaginary() {
            return Err(GeomError::Config(
                "genericity test needs pure imaginary periods".into(),
            ));
        }
        let taus = self.taus();
        let mut hits = Vec::new();
        for class in &singular.classes {
            let (best, dist) = class
                .iter()
                .map(|&k| (k, singular.upstairs[k].distance_to_fiber(&re, &taus)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("classes are nonempty");
            if dist < tol {
                hits.push(singular.upstairs[best]);
            }
        }
        Ok((hits.is_empty(), hits))
    }
}

/// Default intersection threshold for "torus meets curve".
pub const FIBER_DISTANCE_TOL: f64 = 1e-9;

/// Closed-form genericity rule: the torus misses the singular set unless
/// the first two real parts both sit at quarter points, or the first and
/// third both sit at half points (mod 1). Serves as the oracle for the
/// distance-based test.
pub fn genericity_rule(re: [f64; 3], tol: f64) -> bool {
    let near = |x: f64, targets: &[f64]| targets.iter().any(|t| wrap_unit(x - t) < tol);
    let quarter = [0.25, 0.75];
    let half = [0.0, 0.5];
    let alpha_hit = near(re[0], &quarter) && near(re[1], &quarter);
    let beta_hit = near(re[0], &half) && near(re[2], &half);
    !(alpha_hit || beta_hit)
}
