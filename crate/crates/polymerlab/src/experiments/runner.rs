//! Replicate execution: one environment, one forward pass, derived
//! statistics — plus the ordered parallel driver that keeps every
//! campaign reproducible on any thread count.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::env::EnvironmentField;
use crate::error::{Error, Result};
use crate::experiments::{
    CampaignData, CampaignPlan, FluctuationSample, HomogSample, LltSummary, OracleRefs,
    SampleRow,
};
use crate::numeric::NeumaierSum;
use crate::polymer::{
    forward_run_with, llt_residuals, reversed_plane, BracketOptions, ForwardOptions,
};
use crate::walk::n_step_distribution;

/// Offset separating the factorization-residual seed stream from the
/// main campaign stream.
pub const LLT_SEED_OFFSET: u64 = 1 << 20;

/// Main-campaign output of one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateOutput {
    pub sample: FluctuationSample,
    pub homog: Vec<HomogSample>,
}

/// Worker threads to use: the `POLYMERLAB_THREADS` variable when set to
/// a positive integer, otherwise the machine parallelism.
pub fn default_threads() -> usize {
    std::env::var("POLYMERLAB_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        })
}

/// Run `worker` over `todo` on up to `threads` threads, handing results
/// to `consume` strictly in `todo` order; the output stream is
/// therefore independent of scheduling.
pub fn parallel_ordered<T, W, C>(
    todo: &[u64],
    threads: usize,
    worker: W,
    mut consume: C,
) -> Result<()>
where
    T: Send,
    W: Fn(u64) -> Result<T> + Sync,
    C: FnMut(u64, T) -> Result<()>,
{
    if todo.is_empty() {
        return Ok(());
    }
    let threads = threads.max(1).min(todo.len());
    if threads == 1 {
        for &r in todo {
            let t = worker(r)?;
            consume(r, t)?;
        }
        return Ok(());
    }
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<(usize, Result<T>)>();
        for _ in 0..threads {
            let tx = tx.clone();
            let next = &next;
            let worker = &worker;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&r) = todo.get(i) else { break };
                if tx.send((i, worker(r))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending: BTreeMap<usize, T> = BTreeMap::new();
        let mut want = 0usize;
        for (i, res) in rx {
            pending.insert(i, res?);
            while let Some(t) = pending.remove(&want) {
                consume(todo[want], t)?;
                want += 1;
            }
        }
        if want != todo.len() {
            return Err(Error::RunState(format!(
                "worker pool delivered {want} of {} results",
                todo.len()
            )));
        }
        Ok(())
    })
}

/// Execute one replicate of the main campaign: a single forward pass
/// with bracket records, the per-horizon fluctuation statistics, and
/// the reversed-plane measurements.
pub fn run_replicate(
    plan: &CampaignPlan,
    refs: &OracleRefs,
    r: u64,
) -> Result<ReplicateOutput> {
    run_replicate_inner(plan, refs, r)
        .map_err(|e| Error::RunState(format!("replicate {r}: {e}")))
}

fn run_replicate_inner(
    plan: &CampaignPlan,
    refs: &OracleRefs,
    r: u64,
) -> Result<ReplicateOutput> {
    let cfg = &plan.config;
    let field = EnvironmentField::new(cfg.seed_base.wrapping_add(r), cfg.family, plan.dim)?;
    let run = forward_run_with(
        &field,
        cfg.beta,
        plan.forward_end,
        &ForwardOptions {
            capture: Vec::new(),
            bracket: Some(BracketOptions {
                kappa2: plan.profile.kappa2,
                alphas: cfg.alpha_grid.clone(),
                from: plan.bracket_from,
            }),
            radius_floor: 0,
        },
    )?;
    let d = plan.dim.get();
    let gamma2 = (d as f64 - 2.0) / 2.0;
    let w_event = run.partition[plan.n0];
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let scale = plan.scale(n);
        let norm = (n as f64).powf(gamma2);
        let m = cfg.horizon_factor * n;
        let w_n = run.partition[n];
        let w_proxy = run.partition[m];
        let t_n = scale * (w_proxy - w_n);
        let u_n = t_n / w_n;
        let l_n = scale * (w_proxy.ln() - w_n.ln());
        let mut s2 = NeumaierSum::new();
        let mut window: Vec<NeumaierSum> =
            cfg.alpha_grid.iter().map(|_| NeumaierSum::new()).collect();
        let mut lind: Vec<NeumaierSum> =
            cfg.eps_grid.iter().map(|_| NeumaierSum::new()).collect();
        for k in n..m {
            let rec = &run.steps[k - plan.bracket_from];
            debug_assert_eq!(rec.k, k);
            s2.add(rec.bracket);
            for (acc, &v) in window.iter_mut().zip(&rec.window) {
                acc.add(v);
            }
            let step = run.partition[k + 1] - run.partition[k];
            let exceed = scale * step.abs();
            for (acc, &eps) in lind.iter_mut().zip(&cfg.eps_grid) {
                if exceed > eps {
                    acc.add(step * step);
                }
            }
        }
        let abar = refs
            .abar_coeff
            .as_ref()
            .map_or(f64::NAN, |c| c[i] * w_proxy * w_proxy);
        rows.push(SampleRow {
            n,
            w_n,
            w_proxy,
            t_n,
            u_n,
            l_n,
            s2: norm * s2.total(),
            abar,
            lindeberg: lind.into_iter().map(|a| norm * a.total()).collect(),
            window: window.into_iter().map(|a| norm * a.total()).collect(),
        });
    }
    let mut homog = Vec::new();
    if let Some(spec) = &cfg.homog {
        for &k in &spec.k_grid {
            let depth = plan.depth(k).min(k);
            let radius = (spec.alpha * (k as f64).sqrt()).ceil() as i32;
            let plane = reversed_plane(&field, cfg.beta, k + 1, depth, radius)?;
            let free = n_step_distribution(plan.dim, (k + 1) as u32)?;
            let r2_max = spec.alpha * spec.alpha * k as f64;
            let mut acc = NeumaierSum::new();
            plane.grid.for_each(|idx, x| {
                let r2: i64 = x[..d].iter().map(|&c| c as i64 * c as i64).sum();
                if r2 as f64 > r2_max {
                    return;
                }
                let p = free.value(x);
                if p <= 0.0 {
                    return;
                }
                let v = plane.values[idx] * p;
                acc.add(v * v);
            });
            homog.push(HomogSample { replicate: r, k, inner: acc.total() });
        }
    }
    Ok(ReplicateOutput {
        sample: FluctuationSample { replicate: r, w_event, rows },
        homog,
    })
}

/// Run the factorization-residual stage: for each configured horizon,
/// accumulate squared residuals per window site across replicates (in
/// replicate order, so the result is thread-count independent) and take
/// the windowed sup of the mean square.
pub fn run_llt(plan: &CampaignPlan, threads: usize) -> Result<Vec<LltSummary>> {
    let Some(spec) = &plan.config.llt else {
        return Ok(Vec::new());
    };
    let cfg = &plan.config;
    let mut out = Vec::with_capacity(spec.k_grid.len());
    for &k in &spec.k_grid {
        let depth = plan.depth(k);
        let todo: Vec<u64> = (0..spec.replicates).collect();
        let mut sums: Vec<NeumaierSum> = Vec::new();
        let mut mask: Vec<bool> = Vec::new();
        let mut skipped = 0usize;
        let mut grid = None;
        parallel_ordered(
            &todo,
            threads,
            |r| {
                let field = EnvironmentField::new(
                    cfg.seed_base.wrapping_add(LLT_SEED_OFFSET).wrapping_add(r),
                    cfg.family,
                    plan.dim,
                )?;
                llt_residuals(&field, cfg.beta, k, depth, spec.alpha)
                    .map_err(|e| Error::RunState(format!("residual replicate {r}: {e}")))
            },
            |_, res| {
                if sums.is_empty() {
                    sums = res.delta.iter().map(|_| NeumaierSum::new()).collect();
                    mask = res.valid.clone();
                    skipped = res.skipped;
                    grid = Some(res.grid.clone());
                } else if mask != res.valid {
                    return Err(Error::RunState(
                        "window validity changed between replicates".to_string(),
                    ));
                }
                for (acc, dl) in sums.iter_mut().zip(&res.delta) {
                    acc.add(dl * dl);
                }
                Ok(())
            },
        )?;
        let grid = grid.expect("at least one replicate ran");
        let inv = 1.0 / spec.replicates as f64;
        let mut sup = f64::NEG_INFINITY;
        let mut arg = 0usize;
        let mut window_sites = 0usize;
        for (i, (acc, ok)) in sums.iter().zip(&mask).enumerate() {
            if !ok {
                continue;
            }
            window_sites += 1;
            let m = acc.total() * inv;
            if m > sup {
                sup = m;
                arg = i;
            }
        }
        if window_sites == 0 {
            return Err(Error::RunState(format!(
                "residual window at horizon {k} contains no reachable sites"
            )));
        }
        out.push(LltSummary {
            k,
            depth,
            alpha: spec.alpha,
            replicates: spec.replicates,
            window_sites,
            skipped_sites: skipped,
            sup_mean_square: sup,
            arg_site: grid.point_of(arg),
        });
    }
    Ok(out)
}

/// Run the whole campaign in memory: every main replicate, then the
/// residual stage.
pub fn run_campaign(plan: &CampaignPlan, threads: usize) -> Result<CampaignData> {
    let refs = OracleRefs::build(plan)?;
    let todo: Vec<u64> = (0..plan.config.replicates).collect();
    let mut data = CampaignData::default();
    parallel_ordered(
        &todo,
        threads,
        |r| run_replicate(plan, &refs, r),
        |_, out| {
            data.samples.push(out.sample);
            data.homog.extend(out.homog);
            Ok(())
        },
    )?;
    data.llt = run_llt(plan, threads)?;
    Ok(data)
}
