//! Verdict layer: turns campaign data into auditable pass/fail reports.
//!
//! Every check is a [`ReportRow`] carrying the measured quantity, the
//! bound it must stay under, prose explaining how that bound was
//! chosen, and the reference value it is compared against (with any
//! finite-horizon correction spelled out).  A [`TestReport`] groups the
//! rows of one named test; [`full_report`] runs the whole suite.
//!
//! Levels are family-calibrated: a campaign evaluates a few hundred
//! gated comparisons, and the suite is required to pass as a whole on
//! data drawn from the limit laws themselves (see the calibration test
//! at the bottom).  Gates therefore use a per-comparison design level
//! of 1e-4 (about four standard errors), not 0.01 per row; sharper
//! single-row levels belong to dedicated assertions, not to a suite
//! that must stay quiet under its own null.
//!
//! Tests that cannot apply are *skipped* with a reason, not failed:
//! a zero-temperature campaign has no fluctuations to test, a campaign
//! outside the square-integrable phase has no finite limit variance to
//! compare against, and trend gates need enough replicates to mean
//! anything.  A skipped test counts as passed for the overall verdict
//! but keeps its reason visible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::stats::{
    kolmogorov_critical_scale, ks_distance, ks_two_sample, Shard, Summary,
};
use crate::experiments::{CampaignData, CampaignPlan, OracleRefs, SampleRow};
use crate::numeric::{standard_normal_cdf, NeumaierSum};

/// Per-comparison design level for distributional gates.
const GATE_LEVEL: f64 = 1e-4;
/// Standard-error multiplier for moment gates (two-sided ~1e-4 level).
const GATE_Z: f64 = 4.0;
/// Minimum replicate count for any statistical verdict.
const MIN_REPLICATES: usize = 100;
/// Nominal relative budget for variance-to-reference comparisons.
const VAR_FLOOR: f64 = 0.15;
/// Nominal relative budget for the variance/bracket consistency check.
const CONSISTENCY_FLOOR: f64 = 0.20;
/// Nominal relative budget for the conditional second-moment contrast.
const CONTRAST_FLOOR: f64 = 0.60;
/// Coefficient of the finite-horizon allowance added to the KS bound
/// for the log-increment: the exact log transform shifts the mean by
/// `-sigma^2 / (2 n^gamma)` and skews the law at the same order, moving
/// the empirical CDF by at most about `0.5 sigma / n^gamma`.
const LOG_KS_ALLOWANCE: f64 = 0.5;

/// One measured check: passes when `quantity <= bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Short machine-readable name, unique within its test.
    pub statistic: String,
    /// Measured value (always finite).
    pub quantity: f64,
    /// Pass bound; `None` marks an informational row that always passes.
    pub bound: Option<f64>,
    pub passed: bool,
    /// How the bound was chosen.
    pub tolerance: String,
    /// What the quantity is compared against.
    pub reference: String,
    /// Finite-horizon adjustment applied to the reference, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skewness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kurtosis: Option<f64>,
}

impl ReportRow {
    fn gate(
        statistic: impl Into<String>,
        quantity: f64,
        bound: f64,
        tolerance: impl Into<String>,
        reference: impl Into<String>,
    ) -> Self {
        ReportRow {
            statistic: statistic.into(),
            quantity,
            bound: Some(bound),
            passed: quantity.is_finite() && quantity <= bound,
            tolerance: tolerance.into(),
            reference: reference.into(),
            correction: None,
            sample_mean: None,
            sample_variance: None,
            ks: None,
            skewness: None,
            kurtosis: None,
        }
    }

    fn info(
        statistic: impl Into<String>,
        quantity: f64,
        tolerance: impl Into<String>,
        reference: impl Into<String>,
    ) -> Self {
        ReportRow {
            statistic: statistic.into(),
            quantity,
            bound: None,
            passed: true,
            tolerance: tolerance.into(),
            reference: reference.into(),
            correction: None,
            sample_mean: None,
            sample_variance: None,
            ks: None,
            skewness: None,
            kurtosis: None,
        }
    }

    fn with_correction(mut self, text: impl Into<String>) -> Self {
        self.correction = Some(text.into());
        self
    }

    fn with_moments(mut self, s: &Summary) -> Self {
        self.sample_mean = Some(s.mean);
        self.sample_variance = Some(s.variance);
        self.skewness = Some(s.skewness);
        self.kurtosis = Some(s.kurtosis);
        self
    }

    fn with_ks(mut self, d: f64) -> Self {
        self.ks = Some(d);
        self
    }
}

/// All rows of one named test, or a reason it was skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    /// `Some(reason)` when the test did not apply; a skipped test has
    /// no rows and counts as passed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub rows: Vec<ReportRow>,
    pub passed: bool,
}

impl TestReport {
    fn from_rows(name: &str, rows: Vec<ReportRow>) -> Self {
        let passed = rows.iter().all(|r| r.passed);
        TestReport { name: name.to_string(), skipped: None, rows, passed }
    }

    fn skip(name: &str, reason: impl Into<String>) -> Self {
        TestReport {
            name: name.to_string(),
            skipped: Some(reason.into()),
            rows: Vec::new(),
            passed: true,
        }
    }

    /// Find a row by its `statistic` name.
    pub fn row(&self, statistic: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.statistic == statistic)
    }
}

/// The whole verdict suite for one campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub tests: Vec<TestReport>,
    pub passed: bool,
}

impl ReportSet {
    /// Find a test by name.
    pub fn test(&self, name: &str) -> Option<&TestReport> {
        self.tests.iter().find(|t| t.name == name)
    }
}

/// Relative bound for a ratio-to-reference gate: the nominal budget
/// (widened below 400 replicates) or four estimated standard errors,
/// whichever is larger.
fn ratio_bound(floor: f64, rel_se: f64, r: f64) -> f64 {
    let widened = floor * (400.0 / r).sqrt().max(1.0);
    widened.max(GATE_Z * rel_se)
}

/// Validate that the campaign data matches the plan's grids.
fn check_shape(data: &CampaignData, plan: &CampaignPlan) -> Result<()> {
    let cfg = &plan.config;
    if data.samples.is_empty() {
        return Err(Error::invalid("campaign data holds no fluctuation samples"));
    }
    for pair in data.samples.windows(2) {
        if pair[0].replicate >= pair[1].replicate {
            return Err(Error::invalid("replicate ids must be strictly increasing"));
        }
    }
    for s in &data.samples {
        if s.rows.len() != cfg.n_grid.len()
            || s.rows.iter().zip(&cfg.n_grid).any(|(row, &n)| row.n != n)
        {
            return Err(Error::invalid(format!(
                "replicate {}: horizon rows do not match the configured grid",
                s.replicate
            )));
        }
        for row in &s.rows {
            if row.lindeberg.len() != cfg.eps_grid.len()
                || row.window.len() != cfg.alpha_grid.len()
            {
                return Err(Error::invalid(format!(
                    "replicate {}: exceedance/window lists do not match the configured grids",
                    s.replicate
                )));
            }
        }
    }
    for pair in data.llt.windows(2) {
        if pair[0].k >= pair[1].k {
            return Err(Error::invalid("factorization summaries must be ascending in k"));
        }
    }
    Ok(())
}

/// Reasons the statistical verdicts cannot apply to this campaign.
fn common_skip(data: &CampaignData, plan: &CampaignPlan, refs: &OracleRefs) -> Option<String> {
    if plan.profile.kappa2 == 0.0 {
        return Some(
            "degenerate campaign at zero inverse temperature: all tail statistics vanish \
             identically"
                .to_string(),
        );
    }
    if refs.sigma2.is_none() {
        return Some(
            "outside the square-integrable phase: no finite limit variance to compare against"
                .to_string(),
        );
    }
    if data.samples.len() < MIN_REPLICATES {
        return Some(format!(
            "needs at least {MIN_REPLICATES} replicates for stable verdicts, have {}",
            data.samples.len()
        ));
    }
    None
}

fn shard_of<F: Fn(&SampleRow) -> f64>(data: &CampaignData, slot: usize, f: F) -> Shard {
    Shard::from_pairs(
        data.samples.iter().map(|s| (s.replicate, f(&s.rows[slot]))).collect(),
    )
}

/// Gaussian-limit verdict for the rescaled tail increment.
///
/// Per horizon: the increment is centered, its variance matches the
/// exact truncated reference, and the self-normalized version passes a
/// Kolmogorov-Smirnov test against the centered Gaussian law together
/// with its third and fourth moments.  At the largest horizon the
/// variance is also compared against the closed-form limit with the
/// proxy deficit corrected.
pub fn clt_test(
    data: &CampaignData,
    plan: &CampaignPlan,
    refs: &OracleRefs,
) -> Result<TestReport> {
    const NAME: &str = "fluctuation_clt";
    check_shape(data, plan)?;
    if let Some(reason) = common_skip(data, plan, refs) {
        return Ok(TestReport::skip(NAME, reason));
    }
    let cfg = &plan.config;
    let ew2 = refs.ew2_limit.expect("inside phase");
    let sigma2 = refs.sigma2.expect("inside phase");
    let r = data.samples.len();
    let rr = r as f64;
    let scale_const = kolmogorov_critical_scale(GATE_LEVEL)?;
    let ks_crit = scale_const / rr.sqrt();
    let mut rows = Vec::new();
    let mut last_var = f64::NAN;
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let v = refs.v[i];
        let sigma_adj = (v / ew2).sqrt();
        let t = shard_of(data, i, |row| row.t_n).summary()?;
        last_var = t.variance;
        rows.push(
            ReportRow::gate(
                format!("mean_t(n={n})"),
                t.mean.abs(),
                GATE_Z * t.mean_se(),
                format!("four standard errors of the sample mean at R = {r}"),
                "tail increments are centered: the partition value is a mean-one martingale",
            )
            .with_moments(&t),
        );
        rows.push(
            ReportRow::gate(
                format!("var_t(n={n})/exact"),
                (t.variance / v - 1.0).abs(),
                ratio_bound(VAR_FLOOR, t.variance_rel_se(), rr),
                format!(
                    "{:.0}% nominal budget (widened below 400 replicates) or four estimated \
                     standard errors of the sample variance, whichever is larger",
                    VAR_FLOOR * 100.0
                ),
                "exact truncated tail variance from the overlap recursion",
            )
            .with_correction(format!(
                "finite-horizon reference v_n = {v:.9e} at proxy factor K = {}",
                cfg.horizon_factor
            ))
            .with_moments(&t),
        );
        let u = shard_of(data, i, |row| row.u_n);
        let us = u.summary()?;
        let sorted: Vec<f64> = u.sorted_values().iter().map(|x| x / sigma_adj).collect();
        let d_u = ks_distance(&sorted, standard_normal_cdf)?;
        rows.push(
            ReportRow::gate(
                format!("ks_u(n={n})"),
                d_u,
                ks_crit,
                format!(
                    "asymptotic Kolmogorov critical value {ks_crit:.4} at the per-comparison \
                     design level {GATE_LEVEL:e}, R = {r}"
                ),
                "Gaussian limit law of the self-normalized tail",
            )
            .with_correction(format!(
                "rescaled by the exact truncated deviation {sigma_adj:.6} = sqrt(v_n / lim E[W^2])"
            ))
            .with_ks(d_u)
            .with_moments(&us),
        );
        rows.push(
            ReportRow::gate(
                format!("skew_u(n={n})"),
                us.skewness.abs(),
                GATE_Z * (6.0 / rr).sqrt(),
                format!("four standard errors sqrt(6/R) of Gaussian sample skewness at R = {r}"),
                "vanishing odd moments of the Gaussian limit",
            ),
        );
        rows.push(
            ReportRow::gate(
                format!("kurt_u(n={n})"),
                (us.kurtosis - 3.0).abs(),
                GATE_Z * (24.0 / rr).sqrt(),
                format!("four standard errors sqrt(24/R) of Gaussian sample kurtosis at R = {r}"),
                "fourth moment of the Gaussian limit",
            ),
        );
        let l = shard_of(data, i, |row| row.l_n);
        let allowance = LOG_KS_ALLOWANCE * sigma_adj / plan.scale(n);
        let sorted_l: Vec<f64> = l.sorted_values().iter().map(|x| x / sigma_adj).collect();
        let d_l = ks_distance(&sorted_l, standard_normal_cdf)?;
        rows.push(
            ReportRow::gate(
                format!("ks_l(n={n})"),
                d_l,
                ks_crit + allowance,
                format!(
                    "Kolmogorov critical value plus a finite-horizon allowance {allowance:.4} \
                     for the mean shift and skew the exact log transform introduces at this n"
                ),
                "the log increment shares the Gaussian limit of the self-normalized tail",
            )
            .with_correction(format!(
                "allowance coefficient {LOG_KS_ALLOWANCE} * sigma_adj / n^((d-2)/4)"
            ))
            .with_ks(d_l),
        );
    }
    let n_max = *cfg.n_grid.last().expect("validated nonempty");
    let v_max = *refs.v.last().expect("one per horizon");
    let asym = refs.c_k * sigma2 * ew2;
    let t_last = shard_of(data, cfg.n_grid.len() - 1, |row| row.t_n).summary()?;
    let deficit = (v_max / asym - 1.0).abs();
    rows.push(
        ReportRow::gate(
            format!("var_t(n={n_max})/limit"),
            (last_var / asym - 1.0).abs(),
            deficit + ratio_bound(VAR_FLOOR, t_last.variance_rel_se(), rr) * (v_max / asym),
            format!(
                "known finite-horizon offset {deficit:.4} plus the statistical budget of the \
                 exact-reference row",
            ),
            "closed-form limit variance times the proxy deficit 1 - K^(-(d-2)/2)",
        )
        .with_correction(format!(
            "exact-to-limit ratio v_n / (c_K sigma^2 lim E[W^2]) = {:.4} at n = {n_max}",
            v_max / asym
        )),
    );
    Ok(TestReport::from_rows(NAME, rows))
}

/// Split the replicates on the early-mass quantile.
///
/// Returns `(above_ids, p_hat)` where `above_ids` holds the replicate
/// ids whose conditioning scalar exceeds the configured quantile.
fn event_split(data: &CampaignData, plan: &CampaignPlan) -> Result<(Vec<u64>, f64)> {
    let q = plan.config.event.quantile;
    let mut sorted: Vec<(f64, u64)> =
        data.samples.iter().map(|s| (s.w_event, s.replicate)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = sorted.len();
    let idx = ((q * r as f64).ceil() as usize).clamp(1, r) - 1;
    let thr = sorted[idx].0;
    let above: Vec<u64> = data
        .samples
        .iter()
        .filter(|s| s.w_event > thr)
        .map(|s| s.replicate)
        .collect();
    let p_hat = above.len() as f64 / r as f64;
    if !(0.2..=0.8).contains(&p_hat) {
        return Err(Error::RunState(format!(
            "conditioning event unbalanced: the quantile-{q} split keeps {:.3} of the mass \
             above threshold; choose a quantile giving between 0.2 and 0.8",
            p_hat
        )));
    }
    Ok((above, p_hat))
}

/// Asymptotic-independence verdict for the early-mass split.
///
/// Conditioning on an early event must leave the law of the
/// self-normalized tail unchanged (two-sample KS per horizon) while
/// scaling the unnormalized second moment by the conditional mass
/// ratio (direction and band of the plug-in contrast).
pub fn mixing_test(
    data: &CampaignData,
    plan: &CampaignPlan,
    refs: &OracleRefs,
) -> Result<TestReport> {
    const NAME: &str = "dependence_split";
    check_shape(data, plan)?;
    if let Some(reason) = common_skip(data, plan, refs) {
        return Ok(TestReport::skip(NAME, reason));
    }
    let cfg = &plan.config;
    let rr = data.samples.len() as f64;
    let (above, p_hat) = event_split(data, plan)?;
    let above_set: std::collections::BTreeSet<u64> = above.iter().copied().collect();
    let scale_const = kolmogorov_critical_scale(GATE_LEVEL)?;
    let mut rows = vec![ReportRow::info(
        "split_probability",
        p_hat,
        "recorded; the split must keep both sides between 0.2 and 0.8",
        format!(
            "early-mass quantile {} split measured at horizon n0 = {}",
            cfg.event.quantile, plan.n0
        ),
    )];
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let mut ua = Vec::new();
        let mut ub = Vec::new();
        let mut t2a = NeumaierSum::new();
        let mut t2b = NeumaierSum::new();
        let mut w2a = NeumaierSum::new();
        let mut w2b = NeumaierSum::new();
        for s in &data.samples {
            let row = &s.rows[i];
            if above_set.contains(&s.replicate) {
                ua.push(row.u_n);
                t2a.add(row.t_n * row.t_n);
                w2a.add(row.w_proxy * row.w_proxy);
            } else {
                ub.push(row.u_n);
                t2b.add(row.t_n * row.t_n);
                w2b.add(row.w_proxy * row.w_proxy);
            }
        }
        ua.sort_by(f64::total_cmp);
        ub.sort_by(f64::total_cmp);
        let (na, nb) = (ua.len(), ub.len());
        let d2 = ks_two_sample(&ua, &ub)?;
        let crit2 =
            scale_const * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt();
        rows.push(
            ReportRow::gate(
                format!("split_ks_u(n={n})"),
                d2,
                crit2,
                format!(
                    "two-sample Kolmogorov critical value {crit2:.4} at design level \
                     {GATE_LEVEL:e} for side sizes {na} and {nb}"
                ),
                "the normalized tail forgets any event measured at a fixed early horizon",
            )
            .with_ks(d2),
        );
        let ratio = (t2a.total() / na as f64) / (t2b.total() / nb as f64);
        let rho = (w2a.total() / na as f64) / (w2b.total() / nb as f64);
        rows.push(
            ReportRow::gate(
                format!("contrast_direction_t2(n={n})"),
                -(ratio - 1.0) * (rho - 1.0).signum(),
                0.0,
                "sign check: the conditional second moment moves to the same side as the \
                 conditional squared mass",
                "unnormalized tail variance is modulated by the surviving mass",
            )
            .with_correction(format!(
                "measured contrast {ratio:.4} against plug-in mass ratio {rho:.4}"
            )),
        );
        // Conservative error estimate for the log-ratio of two pairs of
        // sample means, ignoring the (helpful) correlation between
        // numerator and denominator draws.
        let rel = |vals: &mut dyn Iterator<Item = f64>| -> Result<f64> {
            let s = Shard::from_pairs(vals.enumerate().map(|(j, x)| (j as u64, x)).collect())
                .summary()?;
            Ok(s.mean_se() / s.mean.abs().max(f64::MIN_POSITIVE))
        };
        let se_sum = {
            let a: Vec<f64> = data
                .samples
                .iter()
                .filter(|s| above_set.contains(&s.replicate))
                .map(|s| s.rows[i].t_n * s.rows[i].t_n)
                .collect();
            let b: Vec<f64> = data
                .samples
                .iter()
                .filter(|s| !above_set.contains(&s.replicate))
                .map(|s| s.rows[i].t_n * s.rows[i].t_n)
                .collect();
            let wa: Vec<f64> = data
                .samples
                .iter()
                .filter(|s| above_set.contains(&s.replicate))
                .map(|s| s.rows[i].w_proxy * s.rows[i].w_proxy)
                .collect();
            let wb: Vec<f64> = data
                .samples
                .iter()
                .filter(|s| !above_set.contains(&s.replicate))
                .map(|s| s.rows[i].w_proxy * s.rows[i].w_proxy)
                .collect();
            let mut total = 0.0f64;
            for v in [&a, &b, &wa, &wb] {
                let r = rel(&mut v.iter().copied())?;
                total += r * r;
            }
            total.sqrt()
        };
        rows.push(
            ReportRow::gate(
                format!("contrast_t2(n={n})"),
                (ratio / rho - 1.0).abs(),
                ratio_bound(CONTRAST_FLOOR, se_sum, rr),
                format!(
                    "{:.0}% nominal band or four conservative standard errors of the \
                     second-moment ratio, whichever is larger",
                    CONTRAST_FLOOR * 100.0
                ),
                "plug-in decomposition: E[T^2 | side] proportional to E[mass^2 | side]",
            )
            .with_correction(format!("plug-in mass ratio {rho:.4} from the tail proxy")),
        );
    }
    Ok(TestReport::from_rows(NAME, rows))
}

/// Bracket-convergence verdict for the truncated quadratic variation.
///
/// Per horizon the bracket sum is unbiased for the exact truncated
/// variance; at the largest horizon its regression slope on the squared
/// tail proxy matches the exact truncated coefficient; the mean
/// absolute deviation from the plug-in conditional variance decreases
/// along the horizon grid; and the sample variance of the rescaled
/// increment agrees with the mean bracket sum.
pub fn bracket_test(
    data: &CampaignData,
    plan: &CampaignPlan,
    refs: &OracleRefs,
) -> Result<TestReport> {
    const NAME: &str = "bracket_convergence";
    check_shape(data, plan)?;
    if let Some(reason) = common_skip(data, plan, refs) {
        return Ok(TestReport::skip(NAME, reason));
    }
    let cfg = &plan.config;
    let coeff = refs.abar_coeff.as_ref().expect("inside phase");
    let r = data.samples.len();
    let rr = r as f64;
    let mut rows = Vec::new();
    let mut dev_means = Vec::new();
    let mut last_s2_mean = f64::NAN;
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let v = refs.v[i];
        let s2 = shard_of(data, i, |row| row.s2).summary()?;
        last_s2_mean = s2.mean;
        rows.push(
            ReportRow::gate(
                format!("mean_s2(n={n})/exact"),
                (s2.mean / v - 1.0).abs(),
                (GATE_Z * s2.mean_se() / v).max(0.01),
                format!("four standard errors of the sample mean at R = {r} (1% floor)"),
                "the expected bracket sum equals the exact truncated tail variance",
            )
            .with_moments(&s2),
        );
        let mut dev = NeumaierSum::new();
        for s in &data.samples {
            dev.add((s.rows[i].s2 - s.rows[i].abar).abs());
        }
        let m = dev.total() / rr;
        dev_means.push(m);
        rows.push(ReportRow::info(
            format!("dev_s2(n={n})"),
            m,
            "recorded for the trend gate below".to_string(),
            "mean absolute deviation of the bracket sum from its homogenized plug-in",
        ));
    }
    // Regression of the bracket sum on the squared tail proxy at the
    // largest horizon.
    let slot = cfg.n_grid.len() - 1;
    let n_max = cfg.n_grid[slot];
    let (mut sx, mut sy) = (NeumaierSum::new(), NeumaierSum::new());
    for s in &data.samples {
        sx.add(s.rows[slot].w_proxy * s.rows[slot].w_proxy);
        sy.add(s.rows[slot].s2);
    }
    let (xbar, ybar) = (sx.total() / rr, sy.total() / rr);
    let (mut sxx, mut sxy) = (NeumaierSum::new(), NeumaierSum::new());
    for s in &data.samples {
        let x = s.rows[slot].w_proxy * s.rows[slot].w_proxy - xbar;
        let y = s.rows[slot].s2 - ybar;
        sxx.add(x * x);
        sxy.add(x * y);
    }
    let slope = sxy.total() / sxx.total();
    let mut sse = NeumaierSum::new();
    for s in &data.samples {
        let x = s.rows[slot].w_proxy * s.rows[slot].w_proxy - xbar;
        let e = (s.rows[slot].s2 - ybar) - slope * x;
        sse.add(e * e);
    }
    let slope_se = (sse.total() / (rr - 2.0) / sxx.total()).sqrt();
    let c_last = coeff[slot];
    rows.push(
        ReportRow::gate(
            format!("slope_s2_on_mass2(n={n_max})"),
            (slope / c_last - 1.0).abs(),
            ratio_bound(VAR_FLOOR, slope_se / c_last, rr),
            format!(
                "{:.0}% nominal budget or four regression standard errors, whichever is larger",
                VAR_FLOOR * 100.0
            ),
            "exact truncated coefficient v_n / lim E[W^2] from the overlap recursion",
        )
        .with_correction(format!("coefficient {c_last:.6e}, fitted slope {slope:.6e}")),
    );
    let (m_first, m_last) =
        (dev_means[0], *dev_means.last().expect("one per horizon"));
    let trend = if m_first == 0.0 {
        if m_last == 0.0 {
            0.0
        } else {
            2.0
        }
    } else {
        m_last / m_first
    };
    rows.push(ReportRow::gate(
        "dev_trend",
        trend,
        1.0,
        "the mean absolute deviation from the plug-in must not grow along the horizon grid",
        "the bracket sum homogenizes: its conditional spread vanishes at the fluctuation \
         scale",
    ));
    let t_last = shard_of(data, slot, |row| row.t_n).summary()?;
    let s2_last = shard_of(data, slot, |row| row.s2).summary()?;
    let se = (t_last.variance_rel_se().powi(2)
        + (s2_last.mean_se() / s2_last.mean.abs().max(f64::MIN_POSITIVE)).powi(2))
    .sqrt();
    rows.push(
        ReportRow::gate(
            format!("var_t_vs_mean_s2(n={n_max})"),
            (t_last.variance / last_s2_mean - 1.0).abs(),
            ratio_bound(CONSISTENCY_FLOOR, se, rr),
            format!(
                "{:.0}% nominal budget or four estimated standard errors of the variance, \
                 whichever is larger",
                CONSISTENCY_FLOOR * 100.0
            ),
            "conditional variance decomposition: Var(T) equals the expected bracket sum",
        )
        .with_correction(format!(
            "sample variance {:.6e} against mean bracket sum {last_s2_mean:.6e}",
            t_last.variance
        )),
    );
    Ok(TestReport::from_rows(NAME, rows))
}

/// Concentration verdict for the reversed endpoint planes and the
/// window tails.
///
/// The rescaled scatter of the reversed-plane inner product must not
/// grow along the time grid, and for every horizon the rescaled tail
/// mass outside the diffusive window must be nonincreasing in the
/// window width.
pub fn homogenization_test(data: &CampaignData, plan: &CampaignPlan) -> Result<TestReport> {
    const NAME: &str = "homogenized_bracket";
    check_shape(data, plan)?;
    let cfg = &plan.config;
    if plan.profile.kappa2 == 0.0 {
        return Ok(TestReport::skip(
            NAME,
            "degenerate campaign at zero inverse temperature: all tail statistics vanish \
             identically",
        ));
    }
    if data.samples.len() < MIN_REPLICATES {
        return Ok(TestReport::skip(
            NAME,
            format!(
                "needs at least {MIN_REPLICATES} replicates for stable verdicts, have {}",
                data.samples.len()
            ),
        ));
    }
    let mut rows = Vec::new();
    if let Some(h) = &cfg.homog {
        if data.homog.is_empty() {
            return Err(Error::invalid(
                "reversed-plane stage configured but no measurements present",
            ));
        }
        let d = plan.dim.get() as f64;
        let mut devs = Vec::new();
        for &k in &h.k_grid {
            let shard = Shard::from_pairs(
                data.homog
                    .iter()
                    .filter(|s| s.k == k)
                    .map(|s| (s.replicate, s.inner))
                    .collect(),
            );
            let hs = shard.summary()?;
            let mut dev = NeumaierSum::new();
            for x in shard.values() {
                dev.add((x - hs.mean).abs());
            }
            let scaled = (k as f64).powf(d / 2.0) * dev.total() / hs.count as f64;
            devs.push(scaled);
            rows.push(
                ReportRow::info(
                    format!("plane_scatter(k={k})"),
                    scaled,
                    "recorded for the trend gate below".to_string(),
                    "rescaled mean absolute scatter of the reversed-plane inner product",
                )
                .with_moments(&hs),
            );
        }
        if devs.len() >= 2 {
            let (first, last) = (devs[0], *devs.last().expect("two or more"));
            let trend = if first == 0.0 {
                if last == 0.0 {
                    0.0
                } else {
                    2.0
                }
            } else {
                last / first
            };
            rows.push(ReportRow::gate(
                "plane_scatter_trend",
                trend,
                1.0,
                "the rescaled scatter must not grow along the time grid",
                "the reversed endpoint plane concentrates around its mean at the diffusive \
                 scale",
            ));
        }
    }
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let mut means = Vec::new();
        for (j, &alpha) in cfg.alpha_grid.iter().enumerate() {
            let mut sum = NeumaierSum::new();
            for s in &data.samples {
                sum.add(s.rows[i].window[j]);
            }
            means.push(sum.total() / data.samples.len() as f64);
            rows.push(ReportRow::info(
                format!("window_mass(n={n},alpha={alpha})"),
                means[j],
                "recorded for the monotonicity gate below".to_string(),
                "mean rescaled tail mass outside the diffusive window",
            ));
        }
        let worst = means
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(ReportRow::gate(
            format!("window_monotone(n={n})"),
            worst,
            0.0,
            "widening the window can only remove outside mass, so adjacent means must not \
             increase",
            "the tail variance concentrates on the diffusive window",
        ));
    }
    Ok(TestReport::from_rows(NAME, rows))
}

/// Exceedance verdict: for every configured level, the mean truncated
/// exceedance sum must not grow from the shortest to the longest
/// horizon.
pub fn lindeberg_test(data: &CampaignData, plan: &CampaignPlan) -> Result<TestReport> {
    const NAME: &str = "lindeberg_exceedance";
    check_shape(data, plan)?;
    let cfg = &plan.config;
    if plan.profile.kappa2 == 0.0 {
        return Ok(TestReport::skip(
            NAME,
            "degenerate campaign at zero inverse temperature: all tail statistics vanish \
             identically",
        ));
    }
    if data.samples.len() < MIN_REPLICATES {
        return Ok(TestReport::skip(
            NAME,
            format!(
                "needs at least {MIN_REPLICATES} replicates for stable verdicts, have {}",
                data.samples.len()
            ),
        ));
    }
    let rr = data.samples.len() as f64;
    let mut rows = Vec::new();
    for (j, &eps) in cfg.eps_grid.iter().enumerate() {
        let mut means = Vec::new();
        for (i, &n) in cfg.n_grid.iter().enumerate() {
            let mut sum = NeumaierSum::new();
            for s in &data.samples {
                sum.add(s.rows[i].lindeberg[j]);
            }
            means.push(sum.total() / rr);
            rows.push(ReportRow::info(
                format!("exceedance(n={n},eps={eps})"),
                means[i],
                "recorded for the trend gate below".to_string(),
                "mean rescaled exceedance sum of single tail increments",
            ));
        }
        let (first, last) = (means[0], *means.last().expect("one per horizon"));
        let trend = if first == 0.0 {
            if last == 0.0 {
                0.0
            } else {
                2.0
            }
        } else {
            last / first
        };
        rows.push(ReportRow::gate(
            format!("exceedance_trend(eps={eps})"),
            trend,
            1.0,
            "the mean exceedance sum must not grow from the shortest to the longest horizon \
             (a pair of exact zeros passes; a zero growing to a nonzero fails)",
            "individual increments become negligible at the fluctuation scale",
        ));
    }
    Ok(TestReport::from_rows(NAME, rows))
}

/// Factorization-residual verdict: the windowed sup of the mean squared
/// residual must decrease along the configured time grid.
pub fn residual_test(data: &CampaignData, plan: &CampaignPlan) -> Result<TestReport> {
    const NAME: &str = "factorization_residual";
    let cfg = &plan.config;
    if plan.profile.kappa2 == 0.0 {
        return Ok(TestReport::skip(
            NAME,
            "degenerate campaign at zero inverse temperature: residuals vanish identically",
        ));
    }
    if cfg.llt.is_none() || data.llt.is_empty() {
        return Ok(TestReport::skip(NAME, "factorization-residual stage disabled"));
    }
    for pair in data.llt.windows(2) {
        if pair[0].k >= pair[1].k {
            return Err(Error::invalid("factorization summaries must be ascending in k"));
        }
    }
    let reps = data.llt[0].replicates;
    if (reps as usize) < MIN_REPLICATES {
        return Ok(TestReport::skip(
            NAME,
            format!(
                "needs at least {MIN_REPLICATES} replicates for a stable sup, have {reps}"
            ),
        ));
    }
    let mut rows = Vec::new();
    for s in &data.llt {
        rows.push(ReportRow::info(
            format!("sup_residual(k={})", s.k),
            s.sup_mean_square,
            format!(
                "recorded over {} window sites ({} skipped) at width {} and depth {}",
                s.window_sites, s.skipped_sites, s.alpha, s.depth
            ),
            "windowed sup of the mean squared front/back factorization residual",
        ));
    }
    for pair in data.llt.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let trend = if a.sup_mean_square == 0.0 {
            if b.sup_mean_square == 0.0 {
                0.0
            } else {
                2.0
            }
        } else {
            b.sup_mean_square / a.sup_mean_square
        };
        rows.push(ReportRow::gate(
            format!("residual_decay(k={}->{})", a.k, b.k),
            trend,
            1.0,
            "the windowed sup must decrease with time",
            "the endpoint conditional mean factorizes into free kernel times reversed mass",
        ));
    }
    Ok(TestReport::from_rows(NAME, rows))
}

/// Run the whole verdict suite in a fixed order.
pub fn full_report(
    data: &CampaignData,
    plan: &CampaignPlan,
    refs: &OracleRefs,
) -> Result<ReportSet> {
    let tests = vec![
        clt_test(data, plan, refs)?,
        mixing_test(data, plan, refs)?,
        bracket_test(data, plan, refs)?,
        homogenization_test(data, plan)?,
        lindeberg_test(data, plan)?,
        residual_test(data, plan)?,
    ];
    let passed = tests.iter().all(|t| t.passed);
    Ok(ReportSet { tests, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::synthetic::synthetic_campaign;
    use crate::experiments::{run_campaign, ExperimentConfig};

    fn default_plan_and_refs() -> (CampaignPlan, OracleRefs) {
        let plan = ExperimentConfig::default_study().plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        (plan, refs)
    }

    /// The whole suite must stay quiet on data drawn from the limit
    /// laws themselves, across many independent harness seeds.
    #[test]
    fn null_model_passes_at_nominal_levels_across_twenty_seeds() {
        let (plan, refs) = default_plan_and_refs();
        for seed in 0..20u64 {
            let data = synthetic_campaign(&plan, &refs, seed).unwrap();
            let set = full_report(&data, &plan, &refs).unwrap();
            if !set.passed {
                let mut detail = String::new();
                for t in &set.tests {
                    for row in t.rows.iter().filter(|r| !r.passed) {
                        detail.push_str(&format!(
                            "\n  {}::{}: {} > {:?}",
                            t.name, row.statistic, row.quantity, row.bound
                        ));
                    }
                }
                panic!("seed {seed} failed the null calibration:{detail}");
            }
            for t in &set.tests {
                assert!(t.skipped.is_none(), "seed {seed}: {} skipped", t.name);
            }
        }
    }

    #[test]
    fn degenerate_and_underpowered_campaigns_skip_with_reasons() {
        let mut cfg = ExperimentConfig::default_study();
        cfg.beta = 0.0;
        cfg.n_grid = vec![2, 4];
        cfg.horizon_factor = 4;
        cfg.replicates = 6;
        cfg.homog = None;
        cfg.llt = None;
        cfg.event.n0 = Some(1);
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let data = run_campaign(&plan, 1).unwrap();
        let set = full_report(&data, &plan, &refs).unwrap();
        assert!(set.passed);
        for t in &set.tests {
            let reason = t.skipped.as_deref().unwrap_or_else(|| {
                panic!("{} should have been skipped on a degenerate campaign", t.name)
            });
            assert!(!reason.is_empty());
            assert!(t.rows.is_empty());
        }

        let mut cfg = ExperimentConfig::default_study();
        cfg.beta = 0.5;
        cfg.n_grid = vec![2, 4];
        cfg.horizon_factor = 4;
        cfg.replicates = 6;
        cfg.homog = None;
        cfg.llt = None;
        cfg.event.n0 = Some(1);
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let data = run_campaign(&plan, 1).unwrap();
        let set = full_report(&data, &plan, &refs).unwrap();
        assert!(set.passed);
        let clt = set.test("fluctuation_clt").unwrap();
        assert!(clt.skipped.as_deref().unwrap().contains("replicates"));
    }

    #[test]
    fn doctored_data_fails_the_matching_verdict() {
        let (plan, refs) = default_plan_and_refs();
        let base = synthetic_campaign(&plan, &refs, 1).unwrap();
        assert!(full_report(&base, &plan, &refs).unwrap().passed);

        // Inflated variance at the largest horizon.
        let mut d = base.clone();
        for s in &mut d.samples {
            s.rows.last_mut().unwrap().t_n *= 1.3;
        }
        let rep = clt_test(&d, &plan, &refs).unwrap();
        assert!(!rep.passed);
        assert!(!rep.row("var_t(n=32)/exact").unwrap().passed);

        // A location shift shows up in the KS row for that horizon only.
        let mut d = base.clone();
        for s in &mut d.samples {
            s.rows[0].u_n += 0.1;
        }
        let rep = clt_test(&d, &plan, &refs).unwrap();
        assert!(!rep.row("ks_u(n=8)").unwrap().passed);
        assert!(rep.row("ks_u(n=16)").unwrap().passed);

        // Exceedance sums that grow with the horizon.
        let mut d = base.clone();
        for s in &mut d.samples {
            for x in &mut s.rows.last_mut().unwrap().lindeberg {
                *x *= 100.0;
            }
        }
        let rep = lindeberg_test(&d, &plan).unwrap();
        assert!(!rep.passed);
        assert!(!rep.row("exceedance_trend(eps=0.2)").unwrap().passed);

        // Window masses that grow when the window widens.
        let mut d = base.clone();
        for s in &mut d.samples {
            s.rows[1].window.swap(0, 1);
        }
        let rep = homogenization_test(&d, &plan).unwrap();
        assert!(!rep.row("window_monotone(n=16)").unwrap().passed);

        // Reversed-plane scatter that grows with time.
        let mut d = base.clone();
        for h in &mut d.homog {
            if h.k == 64 {
                h.inner *= 10.0;
            }
        }
        let rep = homogenization_test(&d, &plan).unwrap();
        assert!(!rep.row("plane_scatter_trend").unwrap().passed);

        // Factorization residuals that grow with time.
        let mut d = base.clone();
        d.llt[1].sup_mean_square = d.llt[0].sup_mean_square * 2.0;
        let rep = residual_test(&d, &plan).unwrap();
        assert!(!rep.row("residual_decay(k=8->32)").unwrap().passed);

        // A biased bracket sum.
        let mut d = base.clone();
        for s in &mut d.samples {
            s.rows.last_mut().unwrap().s2 *= 1.5;
        }
        let rep = bracket_test(&d, &plan, &refs).unwrap();
        assert!(!rep.passed);
        assert!(!rep.row("mean_s2(n=32)/exact").unwrap().passed);
    }

    #[test]
    fn unbalanced_conditioning_event_is_an_error() {
        let mut cfg = ExperimentConfig::default_study();
        cfg.event.quantile = 0.9;
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let data = synthetic_campaign(&plan, &refs, 2).unwrap();
        match mixing_test(&data, &plan, &refs) {
            Err(Error::RunState(msg)) => assert!(msg.contains("unbalanced")),
            other => panic!("expected a run-state error, got {other:?}"),
        }
    }

    #[test]
    fn report_serialization_round_trips() {
        let (plan, refs) = default_plan_and_refs();
        let data = synthetic_campaign(&plan, &refs, 3).unwrap();
        let set = full_report(&data, &plan, &refs).unwrap();
        let text = serde_json::to_string_pretty(&set).unwrap();
        let back: ReportSet = serde_json::from_str(&text).unwrap();
        assert_eq!(set, back);
    }
}
