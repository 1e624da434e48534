//! Point-anchored backward partition functions.

use crate::env::{EnvironmentField, COORD_LIMIT};
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Point, MAX_DIM};

/// The weighted path sum into one space-time anchor.
///
/// `value(y)` sums, over all `steps`-step paths from `y` at time
/// `anchor_time - steps` to `anchor` at `anchor_time`, the product of
/// step factors `1/(2d)` and the disorder weights of the visited sites at
/// times `anchor_time - steps + 1 ..= anchor_time` — the weight at the
/// starting site `y` itself is *not* included, matching the forward
/// slab's convention so that the two DPs compose exactly:
/// `u_k(anchor) = sum_y u_{k - steps}(y) * value(y)`.
#[derive(Clone, Debug)]
pub struct BackwardSlab {
    pub anchor_time: usize,
    pub anchor: Point,
    pub steps: usize,
    /// Indexed by `y - anchor`.
    pub grid: BoxGrid,
    pub values: Vec<f64>,
}

impl BackwardSlab {
    /// `rho(y)` for an absolute starting site `y`; zero off-support.
    pub fn value(&self, y: &Point) -> f64 {
        let mut rel = [0i32; MAX_DIM];
        for j in 0..self.grid.d() {
            rel[j] = y[j] - self.anchor[j];
        }
        self.grid.checked_index(&rel).map_or(0.0, |i| self.values[i])
    }
}

/// Build the backward slab for `(anchor_time, anchor)` over `steps`
/// steps of one disorder realization.
pub fn backward_partition(
    field: &EnvironmentField,
    beta: f64,
    anchor_time: usize,
    anchor: &Point,
    steps: usize,
) -> Result<BackwardSlab> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if steps == 0 || steps > anchor_time {
        return Err(Error::invalid(format!(
            "backward window {steps} must satisfy 1 <= steps <= anchor_time = {anchor_time}"
        )));
    }
    let lambda = field.family().lambda(beta)?;
    let d = field.dimension().get();
    if anchor[..d]
        .iter()
        .any(|&c| c.abs() + steps as i32 >= COORD_LIMIT)
    {
        return Err(Error::SiteRange(anchor[..d].iter().map(|&c| c.abs() as i64).max().unwrap()));
    }
    let grid = BoxGrid::new(d, steps as i32)?;
    let mut src = vec![0.0f64; grid.len()];
    let mut dst = vec![0.0f64; grid.len()];
    let center = grid.index(&[0i32; MAX_DIM]);
    src[center] = 1.0;
    let inv_steps = 1.0 / (2 * d) as f64;
    for j in 1..=steps {
        // Weight the current layer at its own time, then spread one step
        // outward.  Layer j-1 sits at time anchor_time - j + 1.
        let time = (anchor_time - j + 1) as u64;
        let reach = (j - 1) as i32;
        grid.for_each(|idx, rel| {
            let v = src[idx];
            if v != 0.0 && grid.l1_norm(rel) <= reach as i64 {
                let mut site: Point = *rel;
                for (s, &a) in site.iter_mut().zip(anchor.iter()).take(d) {
                    *s += a;
                }
                src[idx] = v * field.weight_unchecked(time, &site, beta, lambda);
            }
        });
        dst.fill(0.0);
        grid.for_each(|idx, rel| {
            let v = src[idx];
            if v != 0.0 {
                for axis in 0..d {
                    for dir in [-1i32, 1] {
                        let mut n = *rel;
                        n[axis] += dir;
                        if let Some(nidx) = grid.checked_index(&n) {
                            dst[nidx] += v * inv_steps;
                        }
                    }
                }
            }
        });
        std::mem::swap(&mut src, &mut dst);
    }
    Ok(BackwardSlab {
        anchor_time,
        anchor: *anchor,
        steps,
        grid,
        values: src,
    })
}
