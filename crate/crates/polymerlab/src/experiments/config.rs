//! Campaign configuration and validation.

use crate::env::{temperature_profile, DisorderFamily, TemperatureProfile};
use crate::error::{Error, Result};
use crate::walk::Dimension;
use serde::{Deserialize, Serialize};

/// Conditioning event for the dependence test: the indicator
/// `{W_{n0} > empirical quantile}` of the early partition value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    /// Time of the conditioning variable; defaults to half the smallest
    /// grid horizon.
    pub n0: Option<usize>,
    /// Split quantile in (0, 1); the default median balances the sides.
    pub quantile: f64,
}

impl Default for EventSpec {
    fn default() -> Self {
        Self { n0: None, quantile: 0.5 }
    }
}

/// Time grid for the reversed-plane concentration measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogSpec {
    /// Anchor times `k`; the scaled scatter must shrink along them.
    pub k_grid: Vec<usize>,
    /// Window radius multiplier, sites `|x| <= alpha sqrt(k)`.
    pub alpha: f64,
}

impl Default for HomogSpec {
    fn default() -> Self {
        Self { k_grid: vec![16, 64], alpha: 4.0 }
    }
}

/// Horizon grid for the factorization-residual decay measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LltSpec {
    /// Horizons `k`; the windowed sup of the mean squared residual must
    /// shrink along them.
    pub k_grid: Vec<usize>,
    /// Window radius multiplier in the lattice norm.
    pub alpha: f64,
    /// Replicates for this stage (separate stream from the main
    /// campaign).
    pub replicates: u64,
}

impl Default for LltSpec {
    fn default() -> Self {
        Self { k_grid: vec![8, 32], alpha: 4.0, replicates: 480 }
    }
}

/// Full description of one simulation campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub family: DisorderFamily,
    pub beta: f64,
    /// Fluctuation horizons `n`, ascending.
    pub n_grid: Vec<usize>,
    /// Tail proxy multiplier `K`: the limit is approximated at `K * n`.
    pub horizon_factor: usize,
    /// Replicates of the main campaign.
    pub replicates: u64,
    /// Replicate `r` draws its environment from seed `seed_base + r`.
    pub seed_base: u64,
    /// Front depth exponent: depth at horizon `k` is `ceil(k^lk_exponent)`.
    pub lk_exponent: f64,
    /// Window thresholds (diffusive units) for the tail-mass records.
    pub alpha_grid: Vec<f64>,
    /// Exceedance levels for the truncated-tail second-moment records.
    pub eps_grid: Vec<f64>,
    pub event: EventSpec,
    /// Reversed-plane stage; `None` disables it.
    pub homog: Option<HomogSpec>,
    /// Factorization-residual stage; `None` disables it.
    pub llt: Option<LltSpec>,
    /// Permit running outside the square-integrable phase (statistics
    /// are then recorded but every verdict is skipped).
    pub allow_outside_l2: bool,
}

impl ExperimentConfig {
    /// The default study point: `d = 3`, standard Gaussian disorder at
    /// `beta = 0.4`, horizons 8..32 with an eightfold tail proxy.
    pub fn default_study() -> Self {
        Self {
            d: 3,
            family: DisorderFamily::StandardGaussian,
            beta: 0.4,
            n_grid: vec![8, 16, 32],
            horizon_factor: 8,
            replicates: 400,
            seed_base: 1,
            lk_exponent: 0.4,
            alpha_grid: vec![2.0, 4.0, 6.0, 8.0],
            eps_grid: vec![0.2, 0.5, 1.0],
            event: EventSpec::default(),
            homog: Some(HomogSpec::default()),
            llt: Some(LltSpec::default()),
            allow_outside_l2: false,
        }
    }

    /// Validate every field and derive the campaign plan.
    ///
    /// Structural checks run before the (more expensive) temperature
    /// profile, so malformed grids are refused instantly.
    pub fn plan(&self) -> Result<CampaignPlan> {
        let dim = Dimension::new(self.d)?;
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid must be nonempty".to_string()));
        }
        let mut n_grid = self.n_grid.clone();
        n_grid.sort_unstable();
        n_grid.dedup();
        if n_grid.len() != self.n_grid.len() || n_grid != self.n_grid {
            return Err(Error::Config("n_grid must be strictly increasing".to_string()));
        }
        if n_grid[0] < 2 {
            return Err(Error::Config(format!(
                "smallest horizon {} must be at least 2",
                n_grid[0]
            )));
        }
        if self.horizon_factor < 4 {
            return Err(Error::Config(format!(
                "horizon_factor {} must be at least 4",
                self.horizon_factor
            )));
        }
        if self.replicates < 2 {
            return Err(Error::Config(format!(
                "replicates {} must be at least 2",
                self.replicates
            )));
        }
        if !(self.lk_exponent > 0.0 && self.lk_exponent < 1.0) {
            return Err(Error::Config(format!(
                "lk_exponent {} must lie in (0, 1)",
                self.lk_exponent
            )));
        }
        validate_grid("alpha_grid", &self.alpha_grid)?;
        validate_grid("eps_grid", &self.eps_grid)?;
        if !(self.event.quantile > 0.0 && self.event.quantile < 1.0) {
            return Err(Error::Config(format!(
                "event quantile {} must lie in (0, 1)",
                self.event.quantile
            )));
        }
        let n0 = match self.event.n0 {
            Some(n0) => {
                if n0 < 1 || n0 > n_grid[0] {
                    return Err(Error::Config(format!(
                        "event time {n0} must lie in [1, {}]",
                        n_grid[0]
                    )));
                }
                n0
            }
            None => (n_grid[0] / 2).max(1),
        };
        if let Some(h) = &self.homog {
            validate_k_grid("homog.k_grid", &h.k_grid)?;
            if !(h.alpha.is_finite() && h.alpha > 0.0) {
                return Err(Error::Config(format!(
                    "homog.alpha {} must be positive",
                    h.alpha
                )));
            }
        }
        if let Some(l) = &self.llt {
            validate_k_grid("llt.k_grid", &l.k_grid)?;
            if !(l.alpha.is_finite() && l.alpha > 0.0) {
                return Err(Error::Config(format!("llt.alpha {} must be positive", l.alpha)));
            }
            if l.replicates < 2 {
                return Err(Error::Config(format!(
                    "llt.replicates {} must be at least 2",
                    l.replicates
                )));
            }
            for &k in &l.k_grid {
                let depth = front_depth(k, self.lk_exponent);
                if depth == 0 || 2 * depth >= k {
                    return Err(Error::Config(format!(
                        "llt horizon {k} leaves no room for front depth {depth} \
                         (needs 1 <= depth < k/2)"
                    )));
                }
            }
        }
        let forward_end = self
            .horizon_factor
            .checked_mul(*n_grid.last().expect("nonempty"))
            .ok_or_else(|| Error::Config("horizon overflow".to_string()))?;
        if forward_end > 100_000 {
            return Err(Error::Config(format!(
                "forward horizon {forward_end} too large (limit 100000)"
            )));
        }
        let profile = temperature_profile(dim, self.family, self.beta)?;
        if !profile.in_l2_region && !self.allow_outside_l2 {
            return Err(Error::Config(format!(
                "beta = {} is outside the square-integrable phase (lambda2 = {:.6} >= {:.6}); \
                 set allow_outside_l2 to run anyway",
                self.beta,
                profile.lambda2,
                -profile.pi_d.ln()
            )));
        }
        Ok(CampaignPlan {
            config: self.clone(),
            dim,
            profile,
            n0,
            forward_end,
            bracket_from: n_grid[0],
        })
    }
}

fn validate_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} must be nonempty")));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Config(format!("{name} must be strictly increasing")));
        }
    }
    if grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::Config(format!("{name} entries must be positive and finite")));
    }
    Ok(())
}

fn validate_k_grid(name: &str, grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} must be nonempty")));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config(format!("{name} must be strictly increasing")));
        }
    }
    if grid[0] < 2 {
        return Err(Error::Config(format!("{name} entries must be at least 2")));
    }
    Ok(())
}

/// Front depth at horizon `k` under the configured exponent.
pub fn front_depth(k: usize, exponent: f64) -> usize {
    (k as f64).powf(exponent).ceil() as usize
}

/// A validated configuration with its derived constants.
#[derive(Clone, Debug)]
pub struct CampaignPlan {
    pub config: ExperimentConfig,
    pub dim: Dimension,
    pub profile: TemperatureProfile,
    /// Conditioning time of the dependence split.
    pub n0: usize,
    /// Last forward step of the main campaign,
    /// `horizon_factor * max(n_grid)`.
    pub forward_end: usize,
    /// First step with tail-bracket records, `min(n_grid)`.
    pub bracket_from: usize,
}

impl CampaignPlan {
    /// `n^{(d-2)/4}`, the fluctuation rescaling at horizon `n`.
    pub fn scale(&self, n: usize) -> f64 {
        (n as f64).powf((self.dim.get() as f64 - 2.0) / 4.0)
    }

    /// Front depth at horizon `k`.
    pub fn depth(&self, k: usize) -> usize {
        front_depth(k, self.config.lk_exponent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_study_plan_derives_the_expected_constants() {
        let plan = ExperimentConfig::default_study().plan().unwrap();
        assert_eq!(plan.dim.get(), 3);
        assert!(plan.profile.in_l2_region);
        assert_eq!(plan.n0, 4);
        assert_eq!(plan.forward_end, 256);
        assert_eq!(plan.bracket_from, 8);
        assert!((plan.scale(16) - 2.0).abs() < 1e-15);
        assert_eq!(plan.depth(8), 3);
        assert_eq!(plan.depth(16), 4);
        assert_eq!(plan.depth(32), 4);
        assert_eq!(plan.depth(64), 6);
    }

    #[test]
    fn rejects_the_documented_misconfigurations() {
        let base = ExperimentConfig::default_study;
        let mut c = base();
        c.n_grid.clear();
        assert!(c.plan().is_err());
        let mut c = base();
        c.n_grid = vec![8, 8, 16];
        assert!(c.plan().is_err());
        let mut c = base();
        c.n_grid = vec![16, 8];
        assert!(c.plan().is_err());
        let mut c = base();
        c.horizon_factor = 3;
        assert!(c.plan().is_err());
        let mut c = base();
        c.replicates = 1;
        assert!(c.plan().is_err());
        let mut c = base();
        c.lk_exponent = 1.0;
        assert!(c.plan().is_err());
        let mut c = base();
        c.alpha_grid = vec![2.0, 2.0];
        assert!(c.plan().is_err());
        let mut c = base();
        c.eps_grid = vec![-0.5];
        assert!(c.plan().is_err());
        let mut c = base();
        c.event.quantile = 1.0;
        assert!(c.plan().is_err());
        let mut c = base();
        c.event.n0 = Some(100);
        assert!(c.plan().is_err());
        let mut c = base();
        c.llt = Some(LltSpec { k_grid: vec![4, 8], alpha: 4.0, replicates: 100 });
        // Depth at k = 4 is ceil(4^0.4) = 2, violating 2 depth < k.
        assert!(c.plan().is_err());
    }

    #[test]
    fn l2_gate_respects_the_override() {
        let mut c = ExperimentConfig::default_study();
        c.beta = 1.2;
        let err = c.plan().unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err}");
        c.allow_outside_l2 = true;
        let plan = c.plan().unwrap();
        assert!(!plan.profile.in_l2_region);
        assert!(plan.profile.sigma2.is_none());
    }

    #[test]
    fn event_time_default_is_half_the_smallest_horizon() {
        let mut c = ExperimentConfig::default_study();
        c.n_grid = vec![4, 8];
        assert_eq!(c.plan().unwrap().n0, 2);
        c.event.n0 = Some(3);
        assert_eq!(c.plan().unwrap().n0, 3);
    }

    #[test]
    fn config_serializes_roundtrip() {
        let c = ExperimentConfig::default_study();
        let json = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
