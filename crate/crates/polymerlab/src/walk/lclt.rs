//! Local-central-limit densities for the simple random walk.
//!
//! On the lattice the walk lives on alternating parity classes, so the
//! Gaussian density carries a factor 2 relative to the continuum:
//! `P(S_k = x) ~ 2 (d / (2 pi k))^{d/2} exp(-d |x|^2 / (2k))` on the
//! admissible parity class.  These approximations are what the exact
//! tables and the quenched residual diagnostics are compared against.

use crate::error::{Error, Result};
use crate::grid::Point;
use crate::walk::Dimension;
use std::f64::consts::PI;

/// Parity-aware Gaussian approximation to `P(S_k = x)`.
///
/// Returns 0 when `k + |x|_1` is odd (unreachable parity) and errors for
/// `k = 0`.
pub fn lclt_density(d: Dimension, k: u64, x: &Point) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("lclt density needs k >= 1".to_string()));
    }
    let dim = d.get();
    let l1: i64 = x[..dim].iter().map(|&c| c.unsigned_abs() as i64).sum();
    if (k as i64 + l1) % 2 != 0 {
        return Ok(0.0);
    }
    let dd = dim as f64;
    let kk = k as f64;
    let norm2: f64 = x[..dim].iter().map(|&c| (c as f64) * (c as f64)).sum();
    Ok(2.0 * (dd / (2.0 * PI * kk)).powf(dd / 2.0) * (-dd * norm2 / (2.0 * kk)).exp())
}

/// Gaussian approximation to the return probability `P(S_{2k} = 0)`:
/// `2 (d / (4 pi k))^{d/2}`.
pub fn lclt_return(d: Dimension, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("lclt return needs k >= 1".to_string()));
    }
    let dd = d.get() as f64;
    Ok(2.0 * (dd / (4.0 * PI * k as f64)).powf(dd / 2.0))
}
