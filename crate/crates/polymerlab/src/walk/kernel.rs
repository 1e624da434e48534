//! Step kernels and exact `n`-step distributions.
//!
//! Two kernels matter here: the nearest-neighbor kernel of the simple
//! random walk, and its two-step self-convolution.  The latter is the
//! step law of the *difference* of two independent walks observed at a
//! common time, which drives every second-moment (overlap) computation:
//! the difference walk at time `k` has the law of a single walk at time
//! `2k`.

use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Point, MAX_DIM};
use crate::numeric::NeumaierSum;
use crate::walk::Dimension;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A finitely supported probability kernel on `Z^d`, stored as sorted
/// `(offset, weight)` pairs.
#[derive(Clone, Debug)]
pub struct StepKernel {
    d: Dimension,
    offsets: Vec<(Point, f64)>,
    reach: i32,
}

impl StepKernel {
    /// Nearest-neighbor kernel: weight `1/(2d)` on each `±e_j`.
    pub fn simple(d: Dimension) -> Self {
        let dim = d.get();
        let w = 1.0 / (2 * dim) as f64;
        let mut offsets = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            for sign in [-1i32, 1] {
                let mut p = [0i32; MAX_DIM];
                p[j] = sign;
                offsets.push((p, w));
            }
        }
        offsets.sort_unstable_by_key(|(p, _)| *p);
        Self { d, offsets, reach: 1 }
    }

    /// Two-step kernel: the self-convolution of [`StepKernel::simple`].
    ///
    /// Carries weight `1/(2d)` at the origin, `1/(4d^2)` at `±2e_j`, and
    /// `1/(2d^2)` at each `±e_i ± e_j` with `i != j`.
    pub fn difference(d: Dimension) -> Self {
        Self::simple(d).convolve_with(&Self::simple(d))
    }

    /// Kernel of the sum of one step of `self` and one step of `other`.
    pub fn convolve_with(&self, other: &StepKernel) -> StepKernel {
        assert_eq!(self.d, other.d, "kernel dimensions must match");
        let mut acc: HashMap<Point, f64> = HashMap::new();
        for (a, wa) in &self.offsets {
            for (b, wb) in &other.offsets {
                let mut p = [0i32; MAX_DIM];
                for j in 0..MAX_DIM {
                    p[j] = a[j] + b[j];
                }
                *acc.entry(p).or_insert(0.0) += wa * wb;
            }
        }
        let mut offsets: Vec<(Point, f64)> = acc.into_iter().collect();
        offsets.sort_unstable_by_key(|(p, _)| *p);
        let reach = offsets
            .iter()
            .flat_map(|(p, _)| p.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0);
        StepKernel { d: self.d, offsets, reach }
    }

    #[inline]
    pub fn dimension(&self) -> Dimension {
        self.d
    }

    /// Sorted `(offset, weight)` pairs.
    #[inline]
    pub fn offsets(&self) -> &[(Point, f64)] {
        &self.offsets
    }

    /// Largest `|offset_j|` over the support.
    #[inline]
    pub fn reach(&self) -> i32 {
        self.reach
    }

    /// Sum of all weights (should be 1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for (_, w) in &self.offsets {
            s.add(*w);
        }
        s.total()
    }

    /// Weight at a given offset (0 when outside the support).
    pub fn weight_at(&self, x: &Point) -> f64 {
        self.offsets
            .binary_search_by_key(x, |(p, _)| *p)
            .map(|i| self.offsets[i].1)
            .unwrap_or(0.0)
    }
}

/// A dense probability distribution on a centered box.
#[derive(Clone, Debug)]
pub struct LatticeDistribution {
    grid: BoxGrid,
    steps: u32,
    data: Vec<f64>,
}

impl LatticeDistribution {
    /// Distribution of the sum of `steps` i.i.d. kernel steps started at
    /// the origin, on the full-support box (radius `steps * reach`).
    pub fn from_kernel(kernel: &StepKernel, steps: u32) -> Result<Self> {
        let d = kernel.dimension().get();
        let radius = steps as i32 * kernel.reach();
        let grid = BoxGrid::new(d, radius)?;
        if grid.len() > 500_000_000 {
            return Err(Error::invalid(format!(
                "dense distribution of {} steps in d={} needs {} cells",
                steps,
                d,
                grid.len()
            )));
        }
        let mut cur = vec![0.0f64; grid.len()];
        let origin = [0i32; MAX_DIM];
        cur[grid.index(&origin)] = 1.0;
        let mut next = vec![0.0f64; grid.len()];

        for k in 0..steps {
            // Only the sub-box reachable in k+1 steps can be populated.
            let active = ((k + 1) as i32 * kernel.reach()).min(radius);
            let sub = BoxGrid::new(d, active)?;
            sub.for_each(|_, x| {
                let mut acc = 0.0;
                for (off, w) in kernel.offsets() {
                    let mut src = *x;
                    for j in 0..d {
                        src[j] -= off[j];
                    }
                    if let Some(i) = grid.checked_index(&src) {
                        acc += w * cur[i];
                    }
                }
                next[grid.index(x)] = acc;
            });
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(Self { grid, steps, data: cur })
    }

    #[inline]
    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    #[inline]
    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Probability at a point (0 outside the box).
    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        self.grid.checked_index(x).map_or(0.0, |i| self.data[i])
    }

    /// Compensated total mass.
    pub fn total_mass(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for &v in &self.data {
            s.add(v);
        }
        s.total()
    }

    /// Largest absolute pointwise difference to another distribution,
    /// compared over the union of both boxes.
    pub fn max_abs_difference(&self, other: &LatticeDistribution) -> f64 {
        let mut worst = 0.0f64;
        let big = if self.grid.radius() >= other.grid.radius() { self } else { other };
        big.grid.for_each(|_, x| {
            let dv = (self.value(x) - other.value(x)).abs();
            if dv > worst {
                worst = dv;
            }
        });
        worst
    }
}

type DistCache = Mutex<HashMap<(usize, u32), Arc<LatticeDistribution>>>;
static N_STEP_CACHE: OnceLock<DistCache> = OnceLock::new();

/// Exact distribution of the simple random walk after `n` steps, cached
/// per `(d, n)`.
pub fn n_step_distribution(d: Dimension, n: u32) -> Result<Arc<LatticeDistribution>> {
    let cache = N_STEP_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(d.get(), n)) {
        return Ok(hit.clone());
    }
    let dist = Arc::new(LatticeDistribution::from_kernel(&StepKernel::simple(d), n)?);
    cache
        .lock()
        .unwrap()
        .entry((d.get(), n))
        .or_insert_with(|| dist.clone());
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> Dimension {
        Dimension::new(3).unwrap()
    }

    #[test]
    fn simple_kernel_shape() {
        for d in 3..=5 {
            let dim = Dimension::new(d).unwrap();
            let k = StepKernel::simple(dim);
            assert_eq!(k.offsets().len(), 2 * d);
            assert!((k.total_mass() - 1.0).abs() < 1e-15);
            for (p, w) in k.offsets() {
                assert!((w - 1.0 / (2 * d) as f64).abs() < 1e-16);
                assert_eq!(p.iter().map(|c| c.abs()).sum::<i32>(), 1);
            }
        }
    }

    #[test]
    fn difference_kernel_shape_d3() {
        let k = StepKernel::difference(d3());
        // 1 origin + 6 double steps + 12 mixed corners.
        assert_eq!(k.offsets().len(), 19);
        assert!((k.total_mass() - 1.0).abs() < 1e-15);
        let origin = [0i32; MAX_DIM];
        assert!((k.weight_at(&origin) - 1.0 / 6.0).abs() < 1e-16);
        let double: Point = [2, 0, 0, 0, 0];
        assert!((k.weight_at(&double) - 1.0 / 36.0).abs() < 1e-16);
        let corner: Point = [1, -1, 0, 0, 0];
        assert!((k.weight_at(&corner) - 1.0 / 18.0).abs() < 1e-16);
    }

    #[test]
    fn difference_kernel_counts_match_formula() {
        // Support size is 1 + 2d + 2d(d-1) in every dimension.
        for d in 3..=5 {
            let dim = Dimension::new(d).unwrap();
            let k = StepKernel::difference(dim);
            assert_eq!(k.offsets().len(), 1 + 2 * d + 2 * d * (d - 1));
        }
    }

    #[test]
    fn difference_walk_matches_doubled_simple_walk() {
        // k difference-steps must equal 2k simple steps in law.
        let diff = LatticeDistribution::from_kernel(&StepKernel::difference(d3()), 5).unwrap();
        let twice = LatticeDistribution::from_kernel(&StepKernel::simple(d3()), 10).unwrap();
        assert!(diff.max_abs_difference(&twice) < 1e-12);
    }

    #[test]
    fn n_step_distribution_is_exact_for_two_steps() {
        let dist = n_step_distribution(d3(), 2).unwrap();
        // Return probability after 2 steps is 1/(2d) = 1/6.
        let origin = [0i32; MAX_DIM];
        assert!((dist.value(&origin) - 1.0 / 6.0).abs() < 1e-15);
        // A diagonal neighbor (1,1,0): 2 orderings * (1/6)^2 = 1/18.
        let diag: Point = [1, 1, 0, 0, 0];
        assert!((dist.value(&diag) - 1.0 / 18.0).abs() < 1e-15);
        assert!((dist.total_mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn mass_is_conserved_for_long_walks() {
        let dist = n_step_distribution(d3(), 40).unwrap();
        assert!((dist.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_parity_sites_are_empty() {
        let dist = n_step_distribution(d3(), 6).unwrap();
        let bad: Point = [1, 0, 0, 0, 0]; // l1 norm 1, odd vs 6 steps
        assert_eq!(dist.value(&bad), 0.0);
    }
}
