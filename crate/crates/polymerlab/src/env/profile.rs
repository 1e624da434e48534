//! Per-temperature constants of the polymer model.

use crate::env::DisorderFamily;
use crate::error::{Error, Result};
use crate::walk::{pi_d, zeta_d_limit, Dimension};
use serde::{Deserialize, Serialize};

/// The two closed-form candidates for `E[W_inf^2]` in the `L^2` region.
///
/// Both are rational in `pi_d` and `exp(lambda_2)`; they differ by a
/// single factor `exp(lambda_2)` and correspond to counting the overlap
/// of two independent polymer paths from their first step versus from
/// their common starting point.  The overlap dynamic program in the
/// `oracle` module adjudicates which one the model actually attains.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SecondMomentForms {
    /// `(1 - pi) / (1 - pi e^{lambda_2})` — plain geometric-series form.
    pub geometric: f64,
    /// `geometric * e^{lambda_2}` — the variant with one extra tilt.
    pub tilted: f64,
}

/// `E[W_inf^2]` candidates from `pi_d` and `lambda_2` directly.
pub fn second_moment_limit_forms(pi: f64, lambda2: f64) -> Result<SecondMomentForms> {
    if !(0.0..1.0).contains(&pi) {
        return Err(Error::invalid(format!("pi = {pi} outside [0, 1)")));
    }
    if lambda2 < 0.0 {
        return Err(Error::invalid(format!("lambda2 = {lambda2} negative")));
    }
    let tilt = lambda2.exp();
    if pi * tilt >= 1.0 {
        return Err(Error::domain(format!(
            "second moment diverges: pi e^lambda2 = {:.6} >= 1",
            pi * tilt
        )));
    }
    let geometric = (1.0 - pi) / (1.0 - pi * tilt);
    Ok(SecondMomentForms { geometric, tilted: geometric * tilt })
}

/// Constants attached to one `(d, family, beta)` triple.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TemperatureProfile {
    pub d: Dimension,
    pub family: DisorderFamily,
    pub beta: f64,
    /// `lambda(beta) = ln E[e^{beta omega}]`.
    pub lambda: f64,
    /// `lambda(2 beta) - 2 lambda(beta)`.
    pub lambda2: f64,
    /// `e^{lambda_2} - 1`, the conditional variance factor of one
    /// normalized weight.
    pub kappa2: f64,
    /// Return constant of the walk, to 1e-9.
    pub pi_d: f64,
    /// Whether `lambda_2 < ln(1 / pi_d)` (square-integrability of `W`).
    pub in_l2_region: bool,
    /// Critical inverse temperature for the `L^2` region; `None` means
    /// the family never leaves the region (threshold at infinity).
    pub beta2: Option<f64>,
    /// Gaussian tail constant (limit form) entering `sigma^2`.
    pub zeta_d: f64,
    /// `E[W_inf^2]` in the geometric closed form; `None` outside `L^2`.
    pub second_moment_limit: Option<f64>,
    /// Limiting fluctuation variance
    /// `kappa_2 (1 - pi)/(1 - pi e^{lambda_2}) * zeta_d`; `None` outside
    /// the `L^2` region.
    pub sigma2: Option<f64>,
}

/// Assemble the [`TemperatureProfile`] for `(d, family, beta)`.
pub fn temperature_profile(
    d: Dimension,
    family: DisorderFamily,
    beta: f64,
) -> Result<TemperatureProfile> {
    family.validate()?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    let lambda = family.lambda(beta)?;
    let lambda2 = family.lambda2(beta)?;
    let kappa2 = lambda2.exp_m1();
    let pi = pi_d(d, 1e-9)?;
    let threshold = -pi.value.ln();
    let in_l2_region = lambda2 < threshold;
    let beta2 = l2_critical_beta(d, family)?;
    let zeta = zeta_d_limit(d);
    let (second_moment_limit, sigma2) = if in_l2_region {
        let forms = second_moment_limit_forms(pi.value, lambda2)?;
        (Some(forms.geometric), Some(kappa2 * forms.geometric * zeta))
    } else {
        (None, None)
    };
    Ok(TemperatureProfile {
        d,
        family,
        beta,
        lambda,
        lambda2,
        kappa2,
        pi_d: pi.value,
        in_l2_region,
        beta2,
        zeta_d: zeta,
        second_moment_limit,
        sigma2,
    })
}

/// Critical inverse temperature `beta_2` where `lambda_2` first reaches
/// `ln(1 / pi_d)`; `Ok(None)` when the family's `lambda_2` saturates
/// below the threshold (the region never ends).
pub fn l2_critical_beta(d: Dimension, family: DisorderFamily) -> Result<Option<f64>> {
    family.validate()?;
    let target = -pi_d(d, 1e-9)?.value.ln();
    if let Some(sup) = family.lambda2_sup() {
        if sup <= target {
            return Ok(None);
        }
    }
    // Bracket the crossing.  For families with a finite lambda2 domain
    // end, approach it geometrically from below; otherwise double.
    let domain_end = family.lambda2_domain_end();
    let mut lo = 0.0f64;
    let mut hi = domain_end.map_or(1.0, |end| end * 0.5);
    let mut bracketed = false;
    for _ in 0..300 {
        if family.lambda2(hi)? > target {
            bracketed = true;
            break;
        }
        lo = hi;
        hi = match domain_end {
            Some(end) => 0.5 * (hi + end),
            None => hi * 2.0,
        };
    }
    if !bracketed {
        return Err(Error::domain(format!(
            "failed to bracket the L2 threshold for {family} in d = {d}"
        )));
    }
    // Bisect to absolute width 1e-11.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if family.lambda2(mid)? > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-11 {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
