//! Synthetic campaign generator drawing directly from the limit laws.
//!
//! The verdict suite must pass, at its nominal levels, on data that
//! satisfies the limit theory exactly; otherwise a tolerance is
//! miscalibrated rather than a model defect.  This generator replaces
//! the lattice simulation with direct draws from the limiting
//! description: a mean-one log-normal limit mass with the closed-form
//! second moment, an independent Gaussian tail multiplier with the
//! exact truncated variance, and concentration/exceedance fields with
//! the right scaling shapes.  Field values are drawn from the limit
//! law, not recomputed from each other, so only the relations the
//! verdicts test are enforced.

use crate::error::{Error, Result};
use crate::experiments::stats::SplitMix;
use crate::experiments::{
    CampaignData, CampaignPlan, FluctuationSample, HomogSample, LltSummary, OracleRefs,
    SampleRow,
};
use crate::oracle::shared_overlap_table;

/// Generate one synthetic campaign for harness seed `seed`.
pub fn synthetic_campaign(
    plan: &CampaignPlan,
    refs: &OracleRefs,
    seed: u64,
) -> Result<CampaignData> {
    let cfg = &plan.config;
    let ew2 = refs
        .ew2_limit
        .ok_or_else(|| Error::invalid("synthetic campaign needs the closed-form limit"))?;
    let sigma2 = refs.sigma2.unwrap_or(0.0);
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(
            "synthetic campaign needs a nondegenerate limit variance".to_string(),
        ));
    }
    let table = shared_overlap_table(plan.dim, plan.profile.lambda2, plan.forward_end)?;
    let ew2_event = table.second_moment(plan.n0)?;
    // Mean-one log-normal mass split into an early factor (matching the
    // conditioning variable's exact second moment) and an independent
    // tail factor.
    let s2_total = ew2.ln();
    let s2_event = ew2_event.ln().min(s2_total);
    let s2_tail = s2_total - s2_event;
    let (rho_e, rho_t) = (s2_event.sqrt(), s2_tail.sqrt());
    let coeff = refs.abar_coeff.as_ref().expect("limit present");

    let mut rng = SplitMix::new(seed);
    let d = plan.dim.get() as f64;
    let mut data = CampaignData::default();
    for r in 0..cfg.replicates {
        let w_event = (rho_e * rng.next_normal() - 0.5 * s2_event).exp();
        let w_tail = (rho_t * rng.next_normal() - 0.5 * s2_tail).exp();
        let w = w_event * w_tail;
        let mut rows = Vec::with_capacity(cfg.n_grid.len());
        for (i, &n) in cfg.n_grid.iter().enumerate() {
            let scale = plan.scale(n);
            let sigma_adj = (refs.v[i] / ew2).sqrt();
            let g = rng.next_normal();
            let t_n = sigma_adj * w * g;
            let u_n = sigma_adj * g;
            let l_n = scale * (1.0 + u_n / scale).ln();
            // Quadratic variation around its conditional mean, with the
            // relative scatter shrinking fast enough that the trend
            // gates clear sampling noise by a wide margin.
            let tau = 0.5 / (scale * scale);
            let s2 = coeff[i] * w * w * (tau * rng.next_normal() - 0.5 * tau * tau).exp();
            let m_w = (0.3 * rng.next_normal() - 0.045).exp();
            let window = cfg
                .alpha_grid
                .iter()
                .map(|a| refs.v[i] * (-0.5 * a * a).exp() * m_w)
                .collect();
            let lindeberg = cfg
                .eps_grid
                .iter()
                .map(|e| {
                    let z = rng.next_normal();
                    0.5 * refs.v[i] / (n as f64) * (-e * e * (n as f64).sqrt()).exp() * z * z
                })
                .collect();
            rows.push(SampleRow {
                n,
                w_n: w,
                w_proxy: w,
                t_n,
                u_n,
                l_n,
                s2,
                abar: coeff[i] * w * w,
                lindeberg,
                window,
            });
        }
        data.samples.push(FluctuationSample { replicate: r, w_event, rows });
        if let Some(h) = &cfg.homog {
            for &k in &h.k_grid {
                let base = (k as f64).powf(-d / 2.0);
                let c = 0.5 * (k as f64).powf(-d / 4.0);
                let inner = base * (c * rng.next_normal() - 0.5 * c * c).exp();
                data.homog.push(HomogSample { replicate: r, k, inner });
            }
        }
    }
    if let Some(l) = &cfg.llt {
        for &k in &l.k_grid {
            let wobble = 1.0 + 0.05 * rng.next_normal().clamp(-3.0, 3.0);
            data.llt.push(LltSummary {
                k,
                depth: plan.depth(k),
                alpha: l.alpha,
                replicates: l.replicates,
                window_sites: 1,
                skipped_sites: 0,
                sup_mean_square: 3.0 * (k as f64).powf(-0.5) * wobble,
                arg_site: [0; crate::grid::MAX_DIM],
            });
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::stats::Shard;
    use crate::experiments::ExperimentConfig;

    #[test]
    fn synthetic_moments_track_their_targets() {
        let plan = ExperimentConfig::default_study().plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let mut cfg = plan.config.clone();
        cfg.replicates = 4000;
        let plan_big = cfg.plan().unwrap();
        let data = synthetic_campaign(&plan_big, &refs, 99).unwrap();
        assert_eq!(data.samples.len(), 4000);
        // The mass has mean one and the closed-form second moment.
        let w = Shard::from_pairs(
            data.samples.iter().map(|s| (s.replicate, s.rows[0].w_n)).collect(),
        )
        .summary()
        .unwrap();
        assert!((w.mean - 1.0).abs() < 4.0 * w.mean_se());
        let ew2 = refs.ew2_limit.unwrap();
        assert!(
            (w.variance - (ew2 - 1.0)).abs() < 0.02,
            "variance {} target {}",
            w.variance,
            ew2 - 1.0
        );
        // The rescaled increment has the exact truncated variance.
        for (i, &v) in refs.v.iter().enumerate() {
            let t = Shard::from_pairs(
                data.samples.iter().map(|s| (s.replicate, s.rows[i].t_n)).collect(),
            )
            .summary()
            .unwrap();
            assert!(
                (t.variance / v - 1.0).abs() < 0.12,
                "slot {i}: variance {} target {v}",
                t.variance
            );
            assert!(t.mean.abs() < 4.0 * t.mean_se());
        }
    }

    #[test]
    fn synthetic_campaigns_are_reproducible_per_seed() {
        let plan = ExperimentConfig::default_study().plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        let a = synthetic_campaign(&plan, &refs, 5).unwrap();
        let b = synthetic_campaign(&plan, &refs, 5).unwrap();
        let c = synthetic_campaign(&plan, &refs, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_points_are_rejected() {
        let mut cfg = ExperimentConfig::default_study();
        cfg.beta = 0.0;
        let plan = cfg.plan().unwrap();
        let refs = OracleRefs::build(&plan).unwrap();
        assert!(synthetic_campaign(&plan, &refs, 1).is_err());
    }
}
