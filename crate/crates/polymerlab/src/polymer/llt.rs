//! Local-limit factorization residuals.

use crate::env::EnvironmentField;
use crate::error::{Error, Result};
use crate::grid::BoxGrid;
use crate::polymer::{forward_run_with, reversed_plane, ForwardOptions};
use crate::walk::n_step_distribution;

/// Site-wise defect of the front/back factorization of the endpoint
/// conditional mean.
///
/// For each site `x` in the window, `delta` holds the difference
/// between the exact conditional mean of the polymer weight given an
/// endpoint at `x` one step past time `k`, and the product of the
/// depth-`depth` front partition value with the time-reversed value
/// anchored there.  Sites the free walk cannot reach carry no residual
/// and are flagged invalid.
#[derive(Clone, Debug)]
pub struct LltResiduals {
    pub k: usize,
    pub depth: usize,
    pub alpha: f64,
    /// Window grid of radius `ceil(alpha * sqrt(k))`.
    pub grid: BoxGrid,
    /// Residual per window site; meaningful only where `valid`.
    pub delta: Vec<f64>,
    /// True on sites inside the window (taxicab norm at most
    /// `alpha * sqrt(k)`) that the free walk reaches with positive
    /// probability.  The lattice norm keeps the window strictly inside
    /// the reachable diamond once `alpha * sqrt(k) < k`, so the sup is
    /// taken over genuinely diffusive sites.
    pub valid: Vec<bool>,
    /// Number of window sites skipped for zero reach probability.
    pub skipped: usize,
    /// The front factor: the partition value at time `depth`.
    pub w_front: f64,
}

impl LltResiduals {
    /// Largest squared residual over valid sites.
    pub fn sup_squared(&self) -> f64 {
        self.delta
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .map(|(d, _)| d * d)
            .fold(0.0, f64::max)
    }
}

/// Measure the factorization residual at every window site for one
/// disorder realization.
pub fn llt_residuals(
    field: &EnvironmentField,
    beta: f64,
    k: usize,
    depth: usize,
    alpha: f64,
) -> Result<LltResiduals> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("window scale must be positive, got {alpha}")));
    }
    if depth == 0 || 2 * depth >= k {
        return Err(Error::invalid(format!(
            "front depth {depth} must satisfy 1 <= depth < k/2 = {}/2",
            k
        )));
    }
    let d = field.dimension().get();
    let radius = (alpha * (k as f64).sqrt()).ceil() as i32;
    // The far window sites carry exponentially little mass, so the
    // forward box is widened past the window to keep their relative
    // accuracy; the clipping certificate still applies on top.
    let floor = radius + (4.0 * (k as f64 / d as f64).sqrt()).ceil() as i32 + 4;
    let run = forward_run_with(
        field,
        beta,
        k,
        &ForwardOptions {
            capture: vec![k],
            radius_floor: floor,
            ..ForwardOptions::default()
        },
    )?;
    let slab = &run.slabs[0];
    let w_front = run.partition[depth];
    let free = n_step_distribution(field.dimension(), (k + 1) as u32)?;
    let reversed = reversed_plane(field, beta, k + 1, depth, radius)?;
    let grid = BoxGrid::new(d, radius)?;
    let mut delta = vec![0.0f64; grid.len()];
    let mut valid = vec![false; grid.len()];
    let mut skipped = 0usize;
    let window_l1 = alpha * (k as f64).sqrt();
    let inv_steps = 1.0 / (2 * d) as f64;
    grid.for_each(|idx, x| {
        let l1: i64 = x[..d].iter().map(|&c| c.abs() as i64).sum();
        if (l1 as f64) > window_l1 {
            return;
        }
        let p = free.value(x);
        if p <= 0.0 {
            skipped += 1;
            return;
        }
        let mut q = 0.0;
        for axis in 0..d {
            for dir in [-1, 1] {
                let mut y = *x;
                y[axis] += dir;
                q += slab.value(&y);
            }
        }
        q *= inv_steps;
        let conditional = q / p;
        let factorized = w_front * reversed.value(x).expect("window matches reversed plane");
        delta[idx] = conditional - factorized;
        valid[idx] = true;
    });
    Ok(LltResiduals {
        k,
        depth,
        alpha,
        grid,
        delta,
        valid,
        skipped,
        w_front,
    })
}
