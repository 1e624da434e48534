//! Directed-polymer partition functions over a sampled disorder field.
//!
//! The forward dynamic program tracks the point-to-plane partition
//! function of a simple-random-walk polymer through one realization of
//! the disorder, normalized so its expectation is identically one.  A
//! run exposes the whole trajectory `W_0, ..., W_n`, optional full
//! spatial slabs at chosen times, optional per-step conditional
//! variance records with spatial window splits, and a certificate
//! bounding the mass lost to the finite simulation box.
//!
//! The backward programs anchor paths at space-time points instead:
//! [`backward_partition`] resolves the windowed weights into a single
//! anchor, while [`reversed_plane`] evaluates the time-reversed
//! partition value at every site of a window in one sweep.  On top of
//! both, [`llt_residuals`] measures how far the endpoint conditional
//! mean is from factorizing into a front partition value times a
//! reversed one — the local-limit structure behind the fluctuation
//! theorems.  Snapshots round-trip captured slabs through a
//! checksummed binary format so long campaigns can stop and resume.

mod backward;
mod llt;
mod reversed;
mod slab;
mod snapshot;

pub use backward::{backward_partition, BackwardSlab};
pub use llt::{llt_residuals, LltResiduals};
pub use reversed::{reversed_plane, ReversedPlane};
pub use slab::{
    forward_run, forward_run_with, BracketOptions, CapturedSlab, ForwardOptions, ForwardRun,
    StepRecord,
};
pub use snapshot::{read_slab, slab_path, write_slab};
