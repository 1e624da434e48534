//! Run-directory lifecycle: durable, resumable campaign state.
//!
//! A run directory holds one campaign: `manifest.json` (configuration,
//! reference constants, status, timestamps), `samples.csv` and
//! `homog.csv` (per-replicate records, rewritten atomically as
//! replicates finish), `llt.csv` (factorization-residual aggregates),
//! and `report.json` (the final verdicts).  All writes go through a
//! temp-file-plus-rename so a crash never leaves a torn file, and the
//! sample files are checkpointed after every finished replicate so a
//! crashed campaign resumes from the last completed replicate.
//!
//! Resumption is strict: the stored configuration must equal the
//! requested one, and the stored reference constants must match what
//! the current build derives for that configuration — mixing replicate
//! data computed against different references would silently corrupt
//! the verdicts, so it is refused.  A directory whose manifest says
//! `complete` is served from disk without recomputation.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::report::{full_report, ReportSet};
use crate::experiments::runner::{parallel_ordered, run_llt, run_replicate};
use crate::experiments::sample::{
    decode_homog, decode_llt, decode_samples, encode_homog, encode_llt, encode_sample,
    homog_header, llt_header, sample_header, CampaignData, FluctuationSample, HomogSample,
    LltSummary,
};
use crate::experiments::{CampaignPlan, ExperimentConfig, OracleRefs};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const HOMOG_FILE: &str = "homog.csv";
pub const LLT_FILE: &str = "llt.csv";
pub const REPORT_FILE: &str = "report.json";

/// Frozen reference constants a run was computed against.
///
/// Stored in the manifest and compared bitwise on resume: replicate
/// data is only meaningful relative to these values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenConstants {
    pub lambda: f64,
    pub lambda2: f64,
    pub kappa2: f64,
    pub pi_d: f64,
    pub zeta_d: f64,
    pub second_moment_limit: Option<f64>,
    pub sigma2: Option<f64>,
    /// Critical inverse temperature of the square-integrable phase;
    /// `None` when the family never leaves it.
    pub beta_two: Option<f64>,
    /// Truncation factor of the tail proxy.
    pub c_k: f64,
    /// Exact truncated tail variances, aligned with the horizon grid.
    pub v: Vec<f64>,
    /// Where the values come from.
    pub provenance: String,
}

impl GoldenConstants {
    pub fn build(plan: &CampaignPlan, refs: &OracleRefs) -> Self {
        GoldenConstants {
            lambda: plan.profile.lambda,
            lambda2: plan.profile.lambda2,
            kappa2: plan.profile.kappa2,
            pi_d: plan.profile.pi_d,
            zeta_d: plan.profile.zeta_d,
            second_moment_limit: refs.ew2_limit,
            sigma2: refs.sigma2,
            beta_two: plan.profile.beta2,
            c_k: refs.c_k,
            v: refs.v.clone(),
            provenance: format!(
                "closed forms from the disorder cumulant generating function and the lattice \
                 return series; truncated variances from the exact overlap recursion up to \
                 horizon {}",
                plan.forward_end
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Incomplete,
    Complete,
}

/// Everything needed to interpret, resume, or audit a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created_unix: u64,
    pub created_iso: String,
    pub updated_unix: u64,
    pub updated_iso: String,
    pub status: RunStatus,
    /// Whether `llt.csv` holds a finished factorization-residual stage.
    pub llt_done: bool,
    pub config: ExperimentConfig,
    pub constants: GoldenConstants,
}

/// Render a unix timestamp as `YYYY-MM-DDThh:mm:ssZ`.
fn iso8601_utc(secs: u64) -> String {
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (hh, mm, ss) = (rem / 3600, rem % 3600 / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}T{hh:02}:{mm:02}:{ss:02}Z")
}

fn now() -> (u64, String) {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    (secs, iso8601_utc(secs))
}

/// Handle on a campaign's on-disk state.
#[derive(Clone, Debug)]
pub struct RunDirectory {
    root: PathBuf,
}

impl RunDirectory {
    /// Wrap an existing path without touching the filesystem; for
    /// read-only inspection of a directory produced elsewhere.
    pub fn at(root: impl Into<PathBuf>) -> Self {
        RunDirectory { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    /// Write `content` to `file` atomically (temp file, then rename).
    fn write_atomic(&self, file: &str, content: &str) -> Result<()> {
        let tmp = self.root.join(format!("{file}.tmp"));
        fs::write(&tmp, content)?;
        fs::rename(&tmp, self.path(file))?;
        Ok(())
    }

    /// Open an existing run directory or initialize a fresh one.
    ///
    /// Opening verifies that the stored configuration equals the
    /// requested one and that the stored reference constants match what
    /// this build derives; either mismatch is refused.
    pub fn prepare(
        root: &Path,
        plan: &CampaignPlan,
        refs: &OracleRefs,
    ) -> Result<(RunDirectory, RunManifest)> {
        let dir = RunDirectory { root: root.to_path_buf() };
        let constants = GoldenConstants::build(plan, refs);
        let manifest_path = dir.path(MANIFEST_FILE);
        if manifest_path.exists() {
            let manifest: RunManifest =
                serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
            if manifest.config != plan.config {
                return Err(Error::Config(format!(
                    "run directory {} was created for a different configuration; \
                     start a new directory or restore the original settings",
                    root.display()
                )));
            }
            if manifest.constants != constants {
                return Err(Error::RunState(format!(
                    "run directory {} records reference constants that differ from \
                     what this build derives; refusing to mix replicate data \
                     computed against different references",
                    root.display()
                )));
            }
            return Ok((dir, manifest));
        }
        fs::create_dir_all(root)?;
        let (unix, iso) = now();
        let manifest = RunManifest {
            tool: "polymerlab".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: unix,
            created_iso: iso.clone(),
            updated_unix: unix,
            updated_iso: iso,
            status: RunStatus::Incomplete,
            llt_done: false,
            config: plan.config.clone(),
            constants,
        };
        dir.save_manifest(&manifest)?;
        Ok((dir, manifest))
    }

    fn save_manifest(&self, manifest: &RunManifest) -> Result<()> {
        self.write_atomic(MANIFEST_FILE, &serde_json::to_string_pretty(manifest)?)
    }

    fn touch_and_save(&self, manifest: &mut RunManifest) -> Result<()> {
        let (unix, iso) = now();
        manifest.updated_unix = unix;
        manifest.updated_iso = iso;
        self.save_manifest(manifest)
    }

    pub fn write_samples(&self, cfg: &ExperimentConfig, samples: &[FluctuationSample]) -> Result<()> {
        let mut out = sample_header(&cfg.eps_grid, &cfg.alpha_grid);
        out.push('\n');
        for s in samples {
            encode_sample(s, &mut out);
        }
        self.write_atomic(SAMPLES_FILE, &out)
    }

    pub fn write_homog(&self, rows: &[HomogSample]) -> Result<()> {
        let mut out = homog_header().to_string();
        out.push('\n');
        for h in rows {
            encode_homog(h, &mut out);
        }
        self.write_atomic(HOMOG_FILE, &out)
    }

    pub fn write_llt(&self, rows: &[LltSummary]) -> Result<()> {
        let mut out = llt_header();
        out.push('\n');
        for l in rows {
            encode_llt(l, &mut out);
        }
        self.write_atomic(LLT_FILE, &out)
    }

    pub fn write_report(&self, report: &ReportSet) -> Result<()> {
        self.write_atomic(REPORT_FILE, &serde_json::to_string_pretty(report)?)
    }

    pub fn read_report(&self) -> Result<ReportSet> {
        Ok(serde_json::from_str(&fs::read_to_string(self.path(REPORT_FILE))?)?)
    }

    fn read_body(&self, file: &str, expected_header: &str) -> Result<Option<String>> {
        let path = self.path(file);
        if !path.exists() {
            return Ok(None);
        }
        let content = fs::read_to_string(&path)?;
        let (header, body) = content.split_once('\n').unwrap_or((content.as_str(), ""));
        if header != expected_header {
            return Err(Error::RunState(format!(
                "{file}: header {header:?} does not match the schema for this \
                 configuration; the file belongs to a different grid layout"
            )));
        }
        Ok(Some(body.to_string()))
    }

    /// Read whatever campaign data the directory holds.
    pub fn read_data(&self, cfg: &ExperimentConfig) -> Result<CampaignData> {
        let mut data = CampaignData::default();
        if let Some(body) =
            self.read_body(SAMPLES_FILE, &sample_header(&cfg.eps_grid, &cfg.alpha_grid))?
        {
            data.samples =
                decode_samples(&body, &cfg.n_grid, cfg.eps_grid.len(), cfg.alpha_grid.len())?;
        }
        if let Some(body) = self.read_body(HOMOG_FILE, homog_header())? {
            data.homog = decode_homog(&body)?;
        }
        if let Some(body) = self.read_body(LLT_FILE, &llt_header())? {
            data.llt = decode_llt(&body)?;
        }
        Ok(data)
    }
}

/// Drop replicates whose records are incomplete (present in one file
/// but not the other) and return the surviving ids.
pub(crate) fn retain_complete(data: &mut CampaignData, cfg: &ExperimentConfig) -> BTreeSet<u64> {
    let mut complete: BTreeSet<u64> = data.samples.iter().map(|s| s.replicate).collect();
    if let Some(h) = &cfg.homog {
        let want: BTreeSet<usize> = h.k_grid.iter().copied().collect();
        complete.retain(|&r| {
            let got: BTreeSet<usize> = data
                .homog
                .iter()
                .filter(|s| s.replicate == r)
                .map(|s| s.k)
                .collect();
            got == want
        });
    }
    data.samples.retain(|s| complete.contains(&s.replicate));
    data.homog.retain(|s| complete.contains(&s.replicate));
    data.samples.sort_by_key(|s| s.replicate);
    data.homog.sort_by_key(|s| (s.replicate, s.k));
    complete
}

/// Whether the stored factorization-residual stage matches the plan.
fn llt_matches(rows: &[LltSummary], cfg: &ExperimentConfig) -> bool {
    match &cfg.llt {
        None => rows.is_empty(),
        Some(spec) => {
            rows.len() == spec.k_grid.len()
                && rows
                    .iter()
                    .zip(&spec.k_grid)
                    .all(|(row, &k)| row.k == k && row.replicates == spec.replicates)
        }
    }
}

/// Drive the campaign in `root` to completion and return its data and
/// verdicts.
///
/// Fresh directories are initialized; partially finished ones resume
/// from their last completed replicate; complete ones are served from
/// disk without recomputation.
pub fn run_to_completion(
    root: &Path,
    plan: &CampaignPlan,
    refs: &OracleRefs,
    threads: usize,
) -> Result<(CampaignData, ReportSet)> {
    let (dir, mut manifest) = RunDirectory::prepare(root, plan, refs)?;
    let cfg = &plan.config;
    if manifest.status == RunStatus::Complete {
        let mut data = dir.read_data(cfg)?;
        let have = retain_complete(&mut data, cfg);
        if have.len() as u64 != cfg.replicates || !llt_matches(&data.llt, cfg) {
            return Err(Error::RunState(format!(
                "run directory {} is marked complete but its data files are not; \
                 the directory has been tampered with or truncated",
                root.display()
            )));
        }
        let report = dir.read_report()?;
        return Ok((data, report));
    }
    let mut data = dir.read_data(cfg)?;
    let have = retain_complete(&mut data, cfg);
    if !manifest.llt_done || !llt_matches(&data.llt, cfg) {
        data.llt.clear();
    }
    let todo: Vec<u64> = (0..cfg.replicates).filter(|r| !have.contains(r)).collect();
    parallel_ordered(
        &todo,
        threads,
        |r| run_replicate(plan, refs, r),
        |_, out| {
            data.samples.push(out.sample);
            data.homog.extend(out.homog);
            data.samples.sort_by_key(|s| s.replicate);
            data.homog.sort_by_key(|s| (s.replicate, s.k));
            dir.write_samples(cfg, &data.samples)?;
            dir.write_homog(&data.homog)?;
            Ok(())
        },
    )?;
    // Canonicalize the files even when everything was resumed, so
    // partial rows dropped above do not linger on disk.
    dir.write_samples(cfg, &data.samples)?;
    dir.write_homog(&data.homog)?;
    if cfg.llt.is_some() && data.llt.is_empty() {
        data.llt = run_llt(plan, threads)?;
        dir.write_llt(&data.llt)?;
        manifest.llt_done = true;
        dir.touch_and_save(&mut manifest)?;
    }
    let report = full_report(&data, plan, refs)?;
    dir.write_report(&report)?;
    manifest.status = RunStatus::Complete;
    dir.touch_and_save(&mut manifest)?;
    Ok((data, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{EventSpec, HomogSpec, LltSpec};
    use std::sync::atomic::{AtomicU64, Ordering};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            d: 3,
            family: crate::env::DisorderFamily::StandardGaussian,
            beta: 0.5,
            n_grid: vec![2, 4],
            horizon_factor: 4,
            replicates: 6,
            seed_base: 11,
            lk_exponent: 0.4,
            alpha_grid: vec![2.0, 4.0],
            eps_grid: vec![0.2, 1.0],
            event: EventSpec { n0: Some(1), quantile: 0.5 },
            homog: Some(HomogSpec { k_grid: vec![4, 6], alpha: 2.0 }),
            llt: Some(LltSpec { k_grid: vec![5, 7], alpha: 3.0, replicates: 4 }),
            allow_outside_l2: false,
        }
    }

    struct TempDir(PathBuf);

    impl TempDir {
        fn new(tag: &str) -> Self {
            static COUNTER: AtomicU64 = AtomicU64::new(0);
            let n = COUNTER.fetch_add(1, Ordering::Relaxed);
            let path = std::env::temp_dir().join(format!(
                "polymerlab-{tag}-{}-{n}",
                std::process::id()
            ));
            TempDir(path)
        }
    }

    impl Drop for TempDir {
        fn drop(&mut self) {
            let _ = fs::remove_dir_all(&self.0);
        }
    }

    #[test]
    fn fresh_runs_complete_and_complete_runs_are_served_from_disk() {
        let cfg = small_config();
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let tmp = TempDir::new("fresh");
        let (data, report) = run_to_completion(&tmp.0, &plan, &refs, 2).unwrap();
        assert_eq!(data.samples.len(), 6);
        assert!(report.passed, "tiny campaigns skip every verdict");
        let stamp = |f: &str| fs::metadata(tmp.0.join(f)).unwrap().modified().unwrap();
        let before = (stamp(SAMPLES_FILE), stamp(MANIFEST_FILE), stamp(REPORT_FILE));
        let (data2, report2) = run_to_completion(&tmp.0, &plan, &refs, 1).unwrap();
        assert_eq!(data, data2);
        assert_eq!(report, report2);
        let after = (stamp(SAMPLES_FILE), stamp(MANIFEST_FILE), stamp(REPORT_FILE));
        assert_eq!(before, after, "a complete run must not rewrite anything");
    }

    #[test]
    fn interrupted_runs_resume_to_the_same_bitwise_result() {
        let cfg = small_config();
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let full_dir = TempDir::new("full");
        let (reference, _) = run_to_completion(&full_dir.0, &plan, &refs, 2).unwrap();

        // Simulate a crash: three finished replicates in the sample
        // file but only two in the reversed-plane file, no residual
        // stage, manifest still incomplete.
        let part_dir = TempDir::new("part");
        let (dir, _) = RunDirectory::prepare(&part_dir.0, &plan, &refs).unwrap();
        dir.write_samples(&cfg, &reference.samples[..3]).unwrap();
        let partial_homog: Vec<HomogSample> = reference
            .homog
            .iter()
            .filter(|h| h.replicate < 2)
            .copied()
            .collect();
        dir.write_homog(&partial_homog).unwrap();
        let (resumed, resumed_report) =
            run_to_completion(&part_dir.0, &plan, &refs, 2).unwrap();
        assert_eq!(resumed, reference);
        assert!(resumed_report.passed);
    }

    #[test]
    fn foreign_configurations_and_stale_constants_are_refused() {
        let cfg = small_config();
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let tmp = TempDir::new("refuse");
        run_to_completion(&tmp.0, &plan, &refs, 2).unwrap();

        let mut other = small_config();
        other.beta = 0.6;
        let other_plan = other.plan().unwrap();
        let other_refs = OracleRefs::build(&other_plan).unwrap();
        match run_to_completion(&tmp.0, &other_plan, &other_refs, 1) {
            Err(Error::Config(msg)) => assert!(msg.contains("different configuration")),
            other => panic!("expected a configuration refusal, got {other:?}"),
        }

        // Stale constants: perturb one stored reference value.
        let manifest_path = tmp.0.join(MANIFEST_FILE);
        let mut value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
        value["constants"]["lambda2"] = serde_json::json!(0.123456);
        fs::write(&manifest_path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
        match run_to_completion(&tmp.0, &plan, &refs, 1) {
            Err(Error::RunState(msg)) => assert!(msg.contains("constants")),
            other => panic!("expected a constants refusal, got {other:?}"),
        }
    }

    #[test]
    fn schema_drift_in_data_files_is_detected() {
        let cfg = small_config();
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let tmp = TempDir::new("schema");
        run_to_completion(&tmp.0, &plan, &refs, 2).unwrap();
        let samples_path = tmp.0.join(SAMPLES_FILE);
        let content = fs::read_to_string(&samples_path).unwrap();
        let doctored = content.replacen("replicate,n,", "replicate,m,", 1);
        fs::write(&samples_path, doctored).unwrap();
        match run_to_completion(&tmp.0, &plan, &refs, 1) {
            Err(Error::RunState(msg)) => assert!(msg.contains("header")),
            other => panic!("expected a header refusal, got {other:?}"),
        }
    }

    #[test]
    fn timestamps_render_as_utc_iso8601() {
        assert_eq!(iso8601_utc(0), "1970-01-01T00:00:00Z");
        assert_eq!(iso8601_utc(1_700_000_000), "2023-11-14T22:13:20Z");
        assert_eq!(iso8601_utc(951_868_800), "2000-03-01T00:00:00Z");
    }
}
