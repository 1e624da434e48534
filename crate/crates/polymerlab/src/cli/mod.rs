//! The `polymerlab` command-line front end.
//!
//! Five subcommands cover the laboratory surface:
//!
//! * `constants` — exact constants of one model point as JSON;
//! * `beta2` — the temperature profile (with the critical inverse
//!   temperature of the square-integrable phase) as JSON;
//! * `moments` — the exact annealed-moment table as CSV;
//! * `run` — execute a configured campaign into a run directory;
//! * `report` — summarize a run directory's stored verdicts.
//!
//! Exit codes: `0` success (including skipped verdicts), `1` at least
//! one verdict failed, `2` usage, configuration, or state errors.  All
//! numeric output uses shortest round-trip decimal form, so every
//! printed double parses back bitwise.

mod config_text;

pub use config_text::{parse_config, render_config};

use crate::env::{
    second_moment_limit_forms, temperature_profile, DisorderFamily, SecondMomentForms,
    TemperatureProfile,
};
use crate::error::{Error, Result};
use crate::experiments::{
    default_threads, retain_complete, run_to_completion, OracleRefs, ReportRow, ReportSet,
    RunDirectory, RunManifest, RunStatus, TestReport, MANIFEST_FILE, REPORT_FILE,
};
use crate::oracle::shared_overlap_table;
use crate::walk::{pi_d, shared_return_table, zeta_d, zeta_d_limit, Dimension};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Which closed-form candidate for the limiting second moment the exact
/// overlap recursion selects.  The two candidates differ by one factor
/// `exp(lambda2)`; the recursion run at `d = 3`, `lambda2 = 0.25` to
/// horizon 400 lands on the plain geometric form within `1e-3` and is
/// far outside that tolerance for the tilted variant.  Frozen here so
/// `constants` can report the verdict without re-running the recursion.
const ADJUDICATED_FORM: &str = "geometric";
const ADJUDICATION_NOTE: &str = "frozen verdict of the exact overlap recursion at d = 3, \
     lambda2 = 0.25, horizon 400: the plain geometric form matches within 1e-3; the \
     tilted variant does not";

/// Horizon at which `constants` reports the finite-horizon tail sum
/// next to its limit form.
const ZETA_HORIZON: usize = 2048;

#[derive(Parser)]
#[command(
    name = "polymerlab",
    version,
    about = "Numerical laboratory for directed polymers in random environments",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// One model point: dimension, disorder family, inverse temperature.
#[derive(Args, Debug)]
struct Point {
    /// Lattice dimension (3, 4, or 5).
    #[arg(long)]
    d: usize,
    /// Disorder family: gaussian | rademacher | bernoulli:p | exponential:rate.
    #[arg(long)]
    family: DisorderFamily,
    /// Inverse temperature, >= 0.
    #[arg(long)]
    beta: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact constants of one model point as JSON: the walk's return
    /// constant and tail sum, the temperature profile, and both
    /// closed-form candidates for the limiting second moment.
    Constants(Point),

    /// The temperature profile as JSON; its `beta2` field is the
    /// critical inverse temperature of the square-integrable phase
    /// (null when the disorder family never leaves the phase).
    Beta2 {
        /// Lattice dimension (3, 4, or 5).
        #[arg(long)]
        d: usize,
        /// Disorder family: gaussian | rademacher | bernoulli:p | exponential:rate.
        #[arg(long)]
        family: DisorderFamily,
        /// Inverse temperature at which to evaluate the profile.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
    },

    /// Exact annealed-moment table as CSV: second moments, both
    /// closed-form limit candidates, the pinned-overlap bridge, and
    /// one-step martingale increment variances.
    Moments {
        #[command(flatten)]
        point: Point,
        /// Horizons to tabulate, ascending.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128")]
        n: Vec<usize>,
    },

    /// Execute a configured campaign into a run directory and print one
    /// verdict line per test.  Resumable: completed replicates are
    /// never recomputed, and a finished directory is served from disk.
    Run {
        /// Configuration file (flat `key = value` text).
        #[arg(long)]
        config: PathBuf,
        /// Run directory to create or resume.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to POLYMERLAB_THREADS or all cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Proceed when the temperature lies outside the
        /// square-integrable phase (all verdicts are then skipped).
        #[arg(long)]
        allow_outside_l2: bool,
    },

    /// Summarize the stored report of a run directory: one table per
    /// test with quantities, bounds, tolerances, and references.
    Report {
        /// Run directory holding manifest.json and report.json.
        run_dir: PathBuf,
    },
}

/// Parse OS arguments and execute; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Constants(point) => cmd_constants(&point, out),
        Command::Beta2 { d, family, beta } => cmd_beta2(d, family, beta, out),
        Command::Moments { point, n } => cmd_moments(&point, &n, out),
        Command::Run { config, out: dir, threads, allow_outside_l2 } => {
            cmd_run(&config, &dir, threads, allow_outside_l2, out)
        }
        Command::Report { run_dir } => cmd_report(&run_dir, out),
    }
}

#[derive(Serialize)]
struct ConstantsOutput {
    d: usize,
    family: String,
    beta: f64,
    /// Return constant of the walk.
    pi_d: f64,
    /// Conservative bound on the return-constant error.
    pi_d_error: f64,
    /// Length of the exact return-probability table behind `pi_d`.
    table_kmax: usize,
    /// `ln(1 / pi_d)`, the phase boundary for `lambda2`.
    l2_log_threshold: f64,
    /// Gaussian tail constant, limit form.
    zeta_d: f64,
    /// The same tail sum evaluated at horizon `zeta_n`.
    zeta_d_n: f64,
    zeta_n: usize,
    profile: TemperatureProfile,
    /// Both closed-form candidates for the limiting second moment;
    /// null outside the square-integrable phase.
    second_moment_forms: Option<SecondMomentForms>,
    adjudicated_form: &'static str,
    adjudication: &'static str,
}

fn cmd_constants(point: &Point, out: &mut dyn Write) -> Result<i32> {
    let dim = Dimension::new(point.d)?;
    let profile = temperature_profile(dim, point.family, point.beta)?;
    let pi = pi_d(dim, 1e-9)?;
    let forms = if profile.in_l2_region {
        Some(second_moment_limit_forms(pi.value, profile.lambda2)?)
    } else {
        None
    };
    let payload = ConstantsOutput {
        d: point.d,
        family: point.family.to_string(),
        beta: point.beta,
        pi_d: pi.value,
        pi_d_error: pi.error_bound,
        table_kmax: pi.table_k_max,
        l2_log_threshold: -pi.value.ln(),
        zeta_d: zeta_d_limit(dim),
        zeta_d_n: zeta_d(dim, ZETA_HORIZON)?,
        zeta_n: ZETA_HORIZON,
        profile,
        second_moment_forms: forms,
        adjudicated_form: ADJUDICATED_FORM,
        adjudication: ADJUDICATION_NOTE,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&payload)?)?;
    Ok(0)
}

fn cmd_beta2(d: usize, family: DisorderFamily, beta: f64, out: &mut dyn Write) -> Result<i32> {
    let dim = Dimension::new(d)?;
    let profile = temperature_profile(dim, family, beta)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&profile)?)?;
    Ok(0)
}

fn cmd_moments(point: &Point, n: &[usize], out: &mut dyn Write) -> Result<i32> {
    let dim = Dimension::new(point.d)?;
    let profile = temperature_profile(dim, point.family, point.beta)?;
    if n.is_empty() {
        return Err(Error::Config("horizon list must be nonempty".to_string()));
    }
    if n[0] < 1 {
        return Err(Error::Config("horizons must be at least 1".to_string()));
    }
    for w in n.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config("horizon list must be strictly increasing".to_string()));
        }
    }
    let max_n = *n.last().expect("nonempty");
    if max_n > 20_000 {
        return Err(Error::Config(format!("largest horizon {max_n} too large (limit 20000)")));
    }
    let table = shared_overlap_table(dim, profile.lambda2, max_n + 1)?;
    let returns = shared_return_table(dim, (4 * (max_n + 1)).max(2048))?;
    // Outside the square-integrable phase the limit candidates diverge;
    // the columns are kept (fixed schema) and hold NaN there.
    let (form_a, form_b) = second_moment_limit_forms(profile.pi_d, profile.lambda2)
        .map_or((f64::NAN, f64::NAN), |f| (f.geometric, f.tilted));
    writeln!(out, "n,exact_EW2,closed_form_A,closed_form_B,bridge_value,exact_ED2")?;
    for &horizon in n {
        let ew2 = table.second_moment(horizon)?;
        let bridge = table.bridge(horizon, &returns)?;
        let ed2 = table.increment_variance(horizon, horizon + 1)?;
        writeln!(out, "{horizon},{ew2},{form_a},{form_b},{bridge},{ed2}")?;
    }
    Ok(0)
}

fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
    allow_outside_l2: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        Error::Config(format!("cannot read configuration {}: {e}", config_path.display()))
    })?;
    let mut cfg = parse_config(&text)?;
    if allow_outside_l2 {
        cfg.allow_outside_l2 = true;
    }
    let plan = cfg.plan()?;
    let refs = OracleRefs::build(&plan)?;
    let threads = threads.unwrap_or_else(default_threads).max(1);
    writeln!(
        out,
        "point: d = {}, family = {}, beta = {}",
        plan.dim, plan.config.family, plan.config.beta
    )?;
    writeln!(
        out,
        "grid: n = {}, tail proxy x{}, {} replicates, {} threads",
        join(&plan.config.n_grid),
        plan.config.horizon_factor,
        plan.config.replicates,
        threads
    )?;
    match (refs.sigma2, refs.ew2_limit) {
        (Some(s2), Some(e2)) => writeln!(
            out,
            "references: sigma2 = {s2}, second moment limit = {e2}, c_K = {}",
            refs.c_k
        )?,
        _ => writeln!(
            out,
            "references: outside the square-integrable phase; every verdict will be skipped"
        )?,
    }
    writeln!(out, "run directory: {}", out_dir.display())?;
    let (_, report) = run_to_completion(out_dir, &plan, &refs, threads)?;
    for test in &report.tests {
        writeln!(out, "{}", verdict_line(test))?;
    }
    writeln!(out, "overall: {}", if report.passed { "PASS" } else { "FAIL" })?;
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_report(run_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let manifest_path = run_dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::Config(format!(
            "{} is not a run directory (no {MANIFEST_FILE})",
            run_dir.display()
        )));
    }
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    writeln!(out, "tool: {} {}", manifest.tool, manifest.version)?;
    writeln!(out, "created: {}   updated: {}", manifest.created_iso, manifest.updated_iso)?;
    let status = match manifest.status {
        RunStatus::Complete => "complete",
        RunStatus::Incomplete => "incomplete",
    };
    writeln!(out, "status: {status}")?;
    writeln!(out, "configuration:")?;
    for line in render_config(&manifest.config).lines() {
        writeln!(out, "  {line}")?;
    }
    let c = &manifest.constants;
    writeln!(
        out,
        "frozen references: pi_d = {}, zeta_d = {}, lambda2 = {}, kappa2 = {}",
        c.pi_d, c.zeta_d, c.lambda2, c.kappa2
    )?;
    writeln!(
        out,
        "                   sigma2 = {}, second moment limit = {}, beta2 = {}, c_K = {}",
        opt(c.sigma2),
        opt(c.second_moment_limit),
        opt(c.beta_two),
        c.c_k
    )?;

    let report_path = run_dir.join(REPORT_FILE);
    if !report_path.exists() {
        if manifest.status == RunStatus::Incomplete {
            let recorded = match RunDirectory::at(run_dir).read_data(&manifest.config) {
                Ok(mut data) => retain_complete(&mut data, &manifest.config).len() as u64,
                Err(_) => 0,
            };
            writeln!(
                out,
                "partial run: {recorded} of {} replicates recorded; verdicts not yet available",
                manifest.config.replicates
            )?;
            return Ok(0);
        }
        return Err(Error::RunState(format!(
            "{} is marked complete but holds no {REPORT_FILE}",
            run_dir.display()
        )));
    }
    let report: ReportSet = serde_json::from_str(&fs::read_to_string(&report_path)?)?;
    if manifest.status == RunStatus::Incomplete {
        writeln!(out, "note: the stored report predates completion; this summary is partial")?;
    }
    writeln!(out)?;
    for test in &report.tests {
        match &test.skipped {
            Some(reason) => writeln!(out, "{} — SKIP: {reason}", test.name)?,
            None => {
                writeln!(out, "{} — {}", test.name, if test.passed { "PASS" } else { "FAIL" })?;
                for row in &test.rows {
                    writeln!(out, "{}", row_line(row))?;
                }
            }
        }
    }
    let gates: usize =
        report.tests.iter().flat_map(|t| &t.rows).filter(|r| r.bound.is_some()).count();
    let skips = report.tests.iter().filter(|t| t.skipped.is_some()).count();
    writeln!(
        out,
        "\noverall: {} ({} tests, {} gated checks, {} skipped)",
        if report.passed { "PASS" } else { "FAIL" },
        report.tests.len(),
        gates,
        skips
    )?;
    Ok(if report.passed { 0 } else { 1 })
}

/// One-line verdict for the `run` output.
fn verdict_line(test: &TestReport) -> String {
    match (&test.skipped, test.passed) {
        (Some(reason), _) => format!("[skip] {} — {reason}", test.name),
        (None, true) => {
            let gates = test.rows.iter().filter(|r| r.bound.is_some()).count();
            format!("[PASS] {} — {gates} checks", test.name)
        }
        (None, false) => {
            let f = test.rows.iter().find(|r| !r.passed).expect("failed test has a failing row");
            format!(
                "[FAIL] {} — {}: {} (bound {}; tolerance: {})",
                test.name,
                f.statistic,
                f.quantity,
                f.bound.unwrap_or(f64::NAN),
                f.tolerance
            )
        }
    }
}

/// One table line per report row for the `report` output.
fn row_line(row: &ReportRow) -> String {
    let mut line = match row.bound {
        Some(bound) => format!(
            "  [{}] {}: {} (bound {}) | tolerance: {} | against: {}",
            if row.passed { "pass" } else { "FAIL" },
            row.statistic,
            row.quantity,
            bound,
            row.tolerance,
            row.reference
        ),
        None => format!("  [info] {}: {} | against: {}", row.statistic, row.quantity, row.reference),
    };
    if let Some(correction) = &row.correction {
        line.push_str(" | adjusted: ");
        line.push_str(correction);
    }
    line
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}
