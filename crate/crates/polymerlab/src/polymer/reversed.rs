//! Time-reversed partition values over a whole plane of anchors.

use crate::env::{EnvironmentField, COORD_LIMIT};
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Point, MAX_DIM};

/// `value(x)` is the depth-`depth` partition function read backward in
/// time from the anchor row: an average over backward walks started at
/// `x` of the exponentiated disorder collected at times
/// `anchor - 1, ..., anchor - depth`, normalized to unit mean.  The
/// disorder on the anchor row itself is deliberately not included.
#[derive(Clone, Debug)]
pub struct ReversedPlane {
    pub anchor: usize,
    pub depth: usize,
    pub grid: BoxGrid,
    pub values: Vec<f64>,
}

impl ReversedPlane {
    /// The reversed value at `x`; `None` outside the computed window.
    pub fn value(&self, x: &Point) -> Option<f64> {
        self.grid.checked_index(x).map(|i| self.values[i])
    }
}

/// Compute the reversed partition value at every site of the window
/// `[-radius, radius]^d` around the origin of the anchor row, exactly
/// (the working box is padded so no boundary truncation reaches the
/// requested window).
pub fn reversed_plane(
    field: &EnvironmentField,
    beta: f64,
    anchor: usize,
    depth: usize,
    radius: i32,
) -> Result<ReversedPlane> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if depth >= anchor {
        return Err(Error::invalid(format!(
            "reversed depth {depth} must be smaller than the anchor time {anchor}"
        )));
    }
    if radius < 0 {
        return Err(Error::invalid(format!("window radius {radius} must be >= 0")));
    }
    let lambda = field.family().lambda(beta)?;
    let d = field.dimension().get();
    let out_grid = BoxGrid::new(d, radius)?;
    if depth == 0 {
        return Ok(ReversedPlane {
            anchor,
            depth,
            grid: out_grid,
            values: vec![1.0; 1usize.max(out_grid.len())],
        });
    }
    let pad = depth as i32 + 1;
    let r_work = radius + pad;
    if r_work >= COORD_LIMIT {
        return Err(Error::SiteRange(r_work as i64));
    }
    let work = BoxGrid::new(d, r_work)?;
    if work.len() > 250_000_000 {
        return Err(Error::invalid(format!(
            "reversed window needs {} cells; shrink radius or depth",
            work.len()
        )));
    }
    let mut src = vec![1.0f64; work.len()];
    let mut dst = vec![0.0f64; work.len()];
    let inv_steps = 1.0 / (2 * d) as f64;
    let mut strides = [0usize; MAX_DIM];
    let mut s = 1usize;
    for stride in strides.iter_mut().take(d) {
        *stride = s;
        s *= work.side();
    }
    // Deepest row first: the value one level above averages its
    // neighbors below and then picks up its own row's disorder; the
    // final anchor level averages without a disorder factor.
    for level in 0..=depth {
        let time = (anchor - depth + level) as u64;
        // Only the sub-box that is still exact needs updating: each
        // pass erodes one cell of validity from the working boundary.
        let r = r_work - 1 - level as i32;
        let run_len = 2 * r as usize + 1;
        work.for_each_row(r, |base, row| {
            let out = &mut dst[base..base + run_len];
            let sm = &src[base - 1..base - 1 + run_len];
            let sp = &src[base + 1..base + 1 + run_len];
            for i in 0..run_len {
                out[i] = sm[i] + sp[i];
            }
            for &stride in &strides[1..d] {
                let lo = &src[base - stride..base - stride + run_len];
                let hi = &src[base + stride..base + stride + run_len];
                for i in 0..run_len {
                    out[i] += lo[i] + hi[i];
                }
            }
            if level < depth {
                let mut point: Point = *row;
                for (i, o) in out.iter_mut().enumerate() {
                    point[0] = -r + i as i32;
                    *o *= inv_steps * field.weight_unchecked(time, &point, beta, lambda);
                }
            } else {
                for o in out.iter_mut() {
                    *o *= inv_steps;
                }
            }
        });
        std::mem::swap(&mut src, &mut dst);
    }
    let mut values = vec![0.0f64; out_grid.len()];
    let run_len = out_grid.side();
    work.for_each_row(radius, |base, row| {
        let dst_base = out_grid.index(row);
        values[dst_base..dst_base + run_len].copy_from_slice(&src[base..base + run_len]);
    });
    Ok(ReversedPlane {
        anchor,
        depth,
        grid: out_grid,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::DisorderFamily;
    use crate::polymer::backward_partition;
    use crate::walk::Dimension;

    fn field(seed: u64, d: usize) -> EnvironmentField {
        EnvironmentField::new(seed, DisorderFamily::StandardGaussian, Dimension::new(d).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_depth_and_zero_beta_are_unit() {
        let f = field(4, 3);
        let trivial = reversed_plane(&f, 0.9, 10, 0, 3).unwrap();
        assert!(trivial.values.iter().all(|&v| v == 1.0));
        let free = reversed_plane(&f, 0.0, 10, 4, 5).unwrap();
        for &v in &free.values {
            assert!((v - 1.0).abs() < 1e-13, "free reversed value {v}");
        }
    }

    #[test]
    fn agrees_with_single_anchor_backward_sums() {
        // Summing a single-anchor backward slab over its start sites
        // gives the anchor-row disorder times the reversed value one
        // level up: both sides describe the same weighted path family.
        for d in [3usize, 4] {
            let f = field(55, d);
            let beta = 0.5;
            let lambda = f.family().lambda(beta).unwrap();
            let (k, l) = (9usize, 3usize);
            let plane = reversed_plane(&f, beta, k, l - 1, 4).unwrap();
            let anchors: [Point; 3] =
                [[0, 0, 0, 0, 0], [1, 1, 0, 0, 0], [-2, 0, 1, 0, 0]];
            for anchor in anchors {
                let back = backward_partition(&f, beta, k, &anchor, l).unwrap();
                let mut total = 0.0;
                back.grid.for_each(|idx, rel| {
                    let _ = rel;
                    total += back.values[idx];
                });
                let w_here = f.weight_unchecked(k as u64, &anchor, beta, lambda);
                let expect = w_here * plane.value(&anchor).unwrap();
                assert!(
                    (total - expect).abs() < 1e-12 * expect.abs().max(1.0),
                    "d = {d}, anchor {anchor:?}: {total} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn unit_mean_over_disorder() {
        let reps = 400;
        let origin: Point = [0; MAX_DIM];
        let side: Point = [1, -1, 0, 0, 0];
        let mut sums = [0.0f64; 2];
        let mut sqs = [0.0f64; 2];
        for seed in 0..reps {
            let f = field(9_000 + seed, 3);
            let plane = reversed_plane(&f, 0.6, 12, 4, 2).unwrap();
            for (i, site) in [origin, side].iter().enumerate() {
                let v = plane.value(site).unwrap();
                sums[i] += v;
                sqs[i] += v * v;
            }
        }
        for i in 0..2 {
            let mean = sums[i] / reps as f64;
            let var = (sqs[i] / reps as f64 - mean * mean).max(0.0);
            let se = (var / reps as f64).sqrt();
            assert!(
                (mean - 1.0).abs() < 4.0 * se + 1e-3,
                "site {i}: mean = {mean}, se = {se}"
            );
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = field(1, 3);
        assert!(reversed_plane(&f, f64::NAN, 10, 2, 3).is_err());
        assert!(reversed_plane(&f, 0.5, 4, 4, 3).is_err());
        assert!(reversed_plane(&f, 0.5, 4, 5, 3).is_err());
        assert!(reversed_plane(&f, 0.5, 10, 2, -1).is_err());
    }
}
