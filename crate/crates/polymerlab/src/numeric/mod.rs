//! Low-level numeric building blocks: compensated summation, an
//! extended-exponent float for products that leave the `f64` range,
//! double-precision standard-normal quantile / CDF routines, and
//! power-law Richardson extrapolation.

mod extfloat;
mod extrapolate;
mod normal;
mod sum;

pub use extfloat::ExtFloat;
pub use extrapolate::richardson_limit;
pub use normal::{standard_normal_cdf, standard_normal_quantile};
pub use sum::{neumaier_sum, NeumaierSum};
