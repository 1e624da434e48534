//! Replicated simulation campaigns and their statistical verdicts.
//!
//! A campaign draws many independent disorder realizations, runs the
//! forward polymer program once per replicate, and distills each into a
//! small record of fluctuation statistics: tail increments of the
//! partition value at several horizons, their self-normalized and
//! logarithmic variants, truncated quadratic variations with window
//! tail masses, exceedance sums, reversed-plane concentration
//! measurements, and factorization-residual fields.  Verdict functions
//! then compare the records against the exact overlap oracle and the
//! closed-form limit constants, producing pass/fail reports whose every
//! tolerance names its budget and reference.
//!
//! Replicate `r` is a pure function of `(configuration, seed_base + r)`
//! and results are reduced in replicate order, so campaigns reproduce
//! bitwise on any thread count.

mod config;
mod persist;
mod refs;
mod report;
mod runner;
mod sample;
pub(crate) mod stats;
mod synthetic;

pub use config::{
    front_depth, CampaignPlan, EventSpec, ExperimentConfig, HomogSpec, LltSpec,
};
pub use persist::{
    run_to_completion, GoldenConstants, RunDirectory, RunManifest, RunStatus,
    HOMOG_FILE, LLT_FILE, MANIFEST_FILE, REPORT_FILE, SAMPLES_FILE,
};
pub(crate) use persist::retain_complete;
pub use refs::OracleRefs;
pub use report::{
    bracket_test, clt_test, full_report, homogenization_test, lindeberg_test,
    mixing_test, residual_test, ReportRow, ReportSet, TestReport,
};
pub use runner::{
    default_threads, parallel_ordered, run_campaign, run_llt, run_replicate,
    ReplicateOutput, LLT_SEED_OFFSET,
};
pub use sample::{
    decode_homog, decode_llt, decode_samples, encode_homog, encode_llt, encode_sample,
    homog_header, llt_header, sample_header, CampaignData, FluctuationSample, HomogSample,
    LltSummary, SampleRow,
};
pub use stats::{
    ks_critical, ks_distance, ks_two_sample, ks_two_sample_critical,
    kolmogorov_critical_scale, Shard, SplitMix, Summary,
};
pub use synthetic::synthetic_campaign;
