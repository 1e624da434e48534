//! Random environments and per-temperature constants.
//!
//! The environment is an i.i.d. field `omega(i, x)` over time-site pairs,
//! realized *counter-based*: each value is a pure hash of `(seed, i, x)`,
//! so any subset of the field can be evaluated in any order, on any
//! thread, with bitwise identical results — the property that makes every
//! simulation in this crate replayable.
//!
//! [`DisorderFamily`] fixes the marginal law and its cumulant generating
//! function `lambda(beta) = ln E[exp(beta omega)]` in closed form.
//! [`TemperatureProfile`] packages the constants the fluctuation theory
//! runs on: `lambda_2 = lambda(2 beta) - 2 lambda(beta)`, the variance
//! factor `kappa_2 = exp(lambda_2) - 1`, the `L^2`-region indicator
//! `lambda_2 < ln(1 / pi_d)`, the critical temperature `beta_2`, the
//! limiting second moment of the partition function, and the limiting
//! variance `sigma^2`.

mod family;
mod field;
mod profile;

pub use family::DisorderFamily;
pub use field::{u64_to_unit_open, EnvironmentField, COORD_LIMIT};
pub use profile::{
    l2_critical_beta, second_moment_limit_forms, temperature_profile, SecondMomentForms,
    TemperatureProfile,
};
