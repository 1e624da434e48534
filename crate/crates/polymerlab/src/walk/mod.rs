//! Exact simple-random-walk quantities on `Z^d`, `d = 3, 4, 5`.
//!
//! This module is the deterministic backbone of the crate: step kernels,
//! dense `n`-step distributions, return probabilities `P(S_{2k} = 0)`
//! computed to better than ten significant digits, the return constant
//! `pi_d`, the Gaussian tail constant governing variance asymptotics, and
//! local-central-limit densities.  Everything downstream (annealed
//! moments, limiting variances, local-limit residuals) consumes these
//! tables, so they carry explicit error accounting.

mod kernel;
mod lclt;
mod returns;

pub use kernel::{n_step_distribution, LatticeDistribution, StepKernel};
pub use lclt::{lclt_density, lclt_return};
pub use returns::{pi_d, shared_return_table, zeta_d, zeta_d_limit, PiEstimate, ReturnTable};

use crate::error::{Error, Result};
use std::fmt;

/// A validated lattice dimension in `{3, 4, 5}`.
///
/// The crate's subject matter is transient walks with square-summable
/// return probabilities, which on `Z^d` means `d >= 3`; the dense-array
/// computations stay practical through `d = 5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if (3..=5).contains(&d) {
            Ok(Dimension(d))
        } else {
            Err(Error::InvalidDimension(d))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Dimension::new(d)
    }
}

impl serde::Serialize for Dimension {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.0 as u64)
    }
}

impl<'de> serde::Deserialize<'de> for Dimension {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let d = u64::deserialize(de)?;
        Dimension::new(d as usize).map_err(serde::de::Error::custom)
    }
}
