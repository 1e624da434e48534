//! Exact reference quantities the campaign verdicts are judged against.

use crate::error::Result;
use crate::experiments::CampaignPlan;
use crate::oracle::shared_overlap_table;

/// Closed-form and dynamic-program references for one campaign plan,
/// built once and shared by the replicate runner and every verdict.
#[derive(Clone, Debug)]
pub struct OracleRefs {
    /// Exact truncated tail variance
    /// `n^{(d-2)/2} E[(W_{Kn} - W_n)^2]`, aligned with the horizon grid.
    pub v: Vec<f64>,
    /// Closed-form `lim E[W_n^2]`; absent outside the square-integrable
    /// phase.
    pub ew2_limit: Option<f64>,
    /// Limiting fluctuation variance; absent outside the phase.
    pub sigma2: Option<f64>,
    /// Asymptotic truncation factor `1 - K^{-(d-2)/2}` of the tail
    /// proxy.
    pub c_k: f64,
    /// Per-horizon homogenized-bracket coefficient `v_n / lim E[W^2]`,
    /// the exact regression slope of the truncated quadratic variation
    /// on the squared tail proxy; absent outside the phase.
    pub abar_coeff: Option<Vec<f64>>,
}

impl OracleRefs {
    pub fn build(plan: &CampaignPlan) -> Result<Self> {
        let table =
            shared_overlap_table(plan.dim, plan.profile.lambda2, plan.forward_end)?;
        let mut v = Vec::with_capacity(plan.config.n_grid.len());
        for &n in &plan.config.n_grid {
            v.push(table.normalized_increment_variance(n, plan.config.horizon_factor * n)?);
        }
        let ew2_limit = plan.profile.second_moment_limit;
        let sigma2 = plan.profile.sigma2;
        let d = plan.dim.get() as f64;
        let c_k = 1.0 - (plan.config.horizon_factor as f64).powf(-(d - 2.0) / 2.0);
        let abar_coeff = ew2_limit.map(|e| v.iter().map(|vn| vn / e).collect());
        Ok(Self { v, ew2_limit, sigma2, c_k, abar_coeff })
    }

    /// Reference standard deviation of the self-normalized increment at
    /// grid slot `i`: `sqrt(v_n / lim E[W^2])`.
    pub fn u_sd(&self, i: usize) -> Option<f64> {
        self.ew2_limit.map(|e| (self.v[i] / e).sqrt())
    }
}
