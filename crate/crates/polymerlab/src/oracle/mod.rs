//! Annealed second-moment oracle: exact overlap dynamic programs.
//!
//! Averaging the square of the normalized partition function over the
//! disorder turns it into an exponential functional of the overlap of two
//! independent walks, and the difference of those walks is itself a
//! random walk.  Every annealed second-moment quantity therefore reduces
//! to a dense dynamic program for the difference walk with a
//! multiplicative tilt `e^{lambda_2}` at the origin.  This module runs
//! those programs with certified clipping, closes their tails with the
//! return-probability machinery of [`crate::walk`], and cross-checks the
//! whole pipeline against brute-force path enumeration — producing the
//! finite-`n` predictions and limits that the statistical experiments are
//! judged against, independent of the sampling code they certify.

mod enumerate;
mod overlap;

pub use enumerate::enumerate_second_moment;
pub use overlap::{shared_overlap_table, LimitEstimate, OverlapTable};
