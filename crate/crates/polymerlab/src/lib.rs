//! Numerical laboratory for directed polymers on `Z^d` (`d = 3, 4, 5`) in
//! weak disorder.
//!
//! The crate is organized around one object: the normalized partition
//! function `W_n` of a simple-random-walk polymer in an i.i.d. random
//! environment, at inverse temperatures where `W_n` is bounded in `L^2`.
//! In that regime the tail of the martingale `W_n` is asymptotically
//! Gaussian after `n^{(d-2)/4}` rescaling, with an explicit limiting
//! variance built from random-walk constants.  Everything here exists to
//! compute both sides of that statement honestly:
//!
//! * [`walk`] — exact simple-random-walk quantities: step kernels, return
//!   probabilities `P(S_{2k} = 0)` to ten-plus significant digits, the
//!   return constant `pi_d`, Gaussian tail constants, and local-limit
//!   densities.
//! * [`env`] — reproducible random environments: counter-based site
//!   hashing, several disorder families with closed-form log-moment
//!   generating functions, and derived per-temperature constants
//!   (`lambda_2`, `kappa_2`, the `L^2` threshold `beta_2`, the limiting
//!   variance `sigma^2`).
//! * [`polymer`] — dense lattice dynamic programming for quenched
//!   partition functions: forward recursions with martingale-increment
//!   bookkeeping, reversed (time-inverted) partition functions, and
//!   local-limit residuals.
//! * [`oracle`] — exact annealed second-moment computations through the
//!   overlap representation of `E[W_n^2]`, used as ground truth for the
//!   Monte Carlo side.
//! * [`experiments`] — replicated simulation campaigns with deterministic
//!   seeding, in-house summary statistics, and pass/fail verdicts for the
//!   Gaussian-fluctuation predictions.
//! * [`cli`] — the `polymerlab` command-line front end.
//!
//! All randomness is counter-based and fully reproducible: a `(seed,
//! time, site)` triple always hashes to the same disorder value, on any
//! thread count.

pub mod cli;
pub mod env;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod numeric;
pub mod oracle;
pub mod polymer;
pub mod walk;

pub use error::{Error, Result};
