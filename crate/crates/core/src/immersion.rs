//! Parametrized immersions of real parameter boxes into complex charts,
//! and the uniform sample grids every defect computation runs over.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::C64;

/// Uniform grid over a half-open box: axis k is sampled at
/// lo_k + j (hi_k - lo_k)/count_k for j = 0..count_k. Half-open so
/// periodic directions are sampled without the duplicate endpoint, and so
/// distinguished parameter values at lo (like s = 0) land on a node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

impl SampleGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(GeomError::DimMismatch {
                expected: lo.len(),
                got: hi.len().max(counts.len()),
            });
        }
        if lo.is_empty() {
            return Err(GeomError::Domain("empty grid specification".into()));
        }
        for k in 0..lo.len() {
            if !(lo[k] < hi[k]) {
                return Err(GeomError::Domain(format!(
                    "grid axis {k}: need lo < hi, got [{}, {}]",
                    lo[k], hi[k]
                )));
            }
            if counts[k] == 0 {
                return Err(GeomError::Domain(format!("grid axis {k}: zero count")));
            }
        }
        Ok(SampleGrid { lo, hi, counts })
    }

    /// Cube grid [0, period)^dim with `count` nodes per axis.
    pub fn periodic_cube(dim: usize, period: f64, count: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![period; dim], vec![count; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.counts[axis] as f64
    }

    /// Parameter of the flat-indexed node, row-major in axis order.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        debug_assert!(flat < self.len());
        let mut rem = flat;
        let mut t = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let j = rem % self.counts[axis];
            rem /= self.counts[axis];
            t[axis] = self.lo[axis] + j as f64 * self.step(axis);
        }
        t
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|flat| self.point(flat))
    }

    pub fn centroid(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| 0.5 * (self.lo[k] + self.hi[k]))
            .collect()
    }

    /// Quadrature weight of one node (cell volume of the uniform grid).
    pub fn cell_weight(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.step(k))
            .product()
    }
}

/// A smooth map from a real k-dimensional parameter box into a complex
/// chart, with its complex Jacobian d z_i / d t_alpha (n rows, k columns).
pub trait ParamImmersion {
    fn domain_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn point(&self, t: &[f64]) -> Result<Vec<C64>>;
    fn jacobian(&self, t: &[f64]) -> Result<DMatrix<C64>>;
    /// The sampling grid defect computations use by default.
    fn default_grid(&self) -> SampleGrid;
}

/// Smallest/largest singular value rank check used by every pullback.
pub(crate) fn check_full_rank(j: &DMatrix<C64>, t: &[f64]) -> Result<()> {
    let svd = j.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(GeomError::Immersion(format!(
            "rank-deficient Jacobian at t = {t:?} (sigma_min = {smin:.3e})"
        )));
    }
    Ok(())
}

/// The flat 3-torus {Re z_j = base_j} in a product of three elliptic
/// curves with pure-imaginary periods i*lambda_j, parametrized by the
/// imaginary parts: t ↦ (base_1 + i t_1, base_2 + i t_2, base_3 + i t_3).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusFiber {
    base: [f64; 3],
    im_periods: [f64; 3],
    grid_count: usize,
}

impl TorusFiber {
    pub fn new(base: [f64; 3], im_periods: [f64; 3]) -> Result<Self> {
        for lam in im_periods {
            if !(lam > 0.0) {
                return Err(GeomError::Domain(format!(
                    "imaginary period must be positive, got {lam}"
                )));
            }
        }
        Ok(TorusFiber {
            base,
            im_periods,
            grid_count: 5,
        })
    }

    pub fn with_grid_count(mut self, count: usize) -> Self {
        self.grid_count = count.max(1);
        self
    }

    pub fn base(&self) -> [f64; 3] {
        self.base
    }

    pub fn im_periods(&self) -> [f64; 3] {
        self.im_periods
    }
}

impl ParamImmersion for TorusFiber {
    fn domain_dim(&self) -> usize {
        3
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn point(&self, t: &[f64]) -> Result<Vec<C64>> {
        if t.len() != 3 {
            return Err(GeomError::DimMismatch {
                expected: 3,
                got: t.len(),
            });
        }
        Ok((0..3).map(|j| C64::new(self.base[j], t[j])).collect())
    }

    fn jacobian(&self, _t: &[f64]) -> Result<DMatrix<C64>> {
        Ok(DMatrix::from_diagonal_element(3, 3, C64::new(0.0, 1.0)))
    }

    fn default_grid(&self) -> SampleGrid {
        SampleGrid::new(
            vec![0.0; 3],
            self.im_periods.to_vec(),
            vec![self.grid_count; 3],
        )
        .expect("torus grid is valid by construction")
    }
}
