//! Forward polymer dynamic program over dense endpoint slabs.

use crate::env::EnvironmentField;
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Point, MAX_DIM};
use crate::numeric::NeumaierSum;

/// The normalized point-to-point partition function `u_k` on its active
/// box at one time, captured out of a forward run.  `u_k(x)` sums the
/// weight products of all `k`-step paths from the origin to `x`, each
/// step weighted `1/(2d)` and each visited time-site pair weighted
/// `exp(beta omega - lambda)`, so `E[u_k(x)] = P(S_k = x)` and
/// `sum_x u_k(x) = W_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapturedSlab {
    pub time: usize,
    pub grid: BoxGrid,
    pub values: Vec<f64>,
}

impl CapturedSlab {
    /// `u_time(x)`; zero outside the captured box.
    pub fn value(&self, x: &Point) -> f64 {
        self.grid.checked_index(x).map_or(0.0, |i| self.values[i])
    }

    /// `sum_x u_time(x)` — the partition value this slab carries.
    pub fn total(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for &v in &self.values {
            acc.add(v);
        }
        acc.total()
    }
}

/// Conditional variance of one partition increment, recorded between
/// the spread step and the disorder step.
///
/// With `q_k(x)` the spread mass feeding time `k + 1`, `bracket` is
/// `kappa2 * sum_x q_k(x)^2` — the variance of `W_{k+1} - W_k` given
/// everything through time `k` — and `window[i]` restricts that sum to
/// sites with Euclidean norm above `alphas[i] * sqrt(k)`.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub k: usize,
    pub bracket: f64,
    pub window: Vec<f64>,
}

/// Requests per-step [`StepRecord`]s from a forward run.
#[derive(Clone, Debug)]
pub struct BracketOptions {
    /// The variance multiplier `e^{lambda2} - 1` of the squared-mass sum.
    pub kappa2: f64,
    /// Window thresholds in units of the diffusive scale `sqrt(k)`,
    /// nonincreasing masses as the threshold grows.
    pub alphas: Vec<f64>,
    /// First step index to record; records then cover `from..n_max`.
    pub from: usize,
}

/// Optional extras accepted by [`forward_run_with`].
#[derive(Clone, Debug, Default)]
pub struct ForwardOptions {
    /// Times whose full slabs should be captured.
    pub capture: Vec<usize>,
    /// When set, per-step bracket records are produced.
    pub bracket: Option<BracketOptions>,
    /// Lower bound on the active box radius (0 keeps the default
    /// schedule); raises far-field accuracy at extra cost.
    pub radius_floor: i32,
}

/// Everything one forward sweep produces.
#[derive(Clone, Debug)]
pub struct ForwardRun {
    /// `W_k` for `k = 0..=n_max` (`W_0 = 1`).
    pub partition: Vec<f64>,
    /// Total unweighted mass dropped at the moving box edge; its
    /// expectation equals the bias of every later `W_k`, so it doubles
    /// as the truncation certificate.
    pub leak: f64,
    /// Slabs captured at the requested times, ascending.
    pub slabs: Vec<CapturedSlab>,
    /// Per-step bracket records when requested, else empty.
    pub steps: Vec<StepRecord>,
}

/// Active box radius after `k` forward steps: the free support `k` until
/// that exceeds six per-axis standard deviations (`k/d` per axis) plus
/// slack.  Tighter than the oracle's seven-sigma cap because sampling
/// error dwarfs the ~1e-7 truncation bias this admits.
pub(crate) fn active_radius(d: usize, k: usize) -> i32 {
    let free = k as f64;
    let spread = (6.0 * (k as f64 / d as f64).sqrt()).ceil() + 4.0;
    free.min(spread) as i32
}

/// Run the forward dynamic program to `n_max` under one disorder
/// realization, capturing full slabs at `capture` times (sorted and
/// deduplicated internally).
pub fn forward_run(
    field: &EnvironmentField,
    beta: f64,
    n_max: usize,
    capture: &[usize],
) -> Result<ForwardRun> {
    forward_run_with(
        field,
        beta,
        n_max,
        &ForwardOptions {
            capture: capture.to_vec(),
            ..ForwardOptions::default()
        },
    )
}

/// [`forward_run`] with full control over captures, bracket records,
/// and the box schedule.
pub fn forward_run_with(
    field: &EnvironmentField,
    beta: f64,
    n_max: usize,
    options: &ForwardOptions,
) -> Result<ForwardRun> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if n_max == 0 {
        return Err(Error::invalid("forward run needs n_max >= 1".to_string()));
    }
    let lambda = field.family().lambda(beta)?;
    let d = field.dimension().get();
    let mut want = options.capture.clone();
    want.sort_unstable();
    want.dedup();
    if let Some(&biggest) = want.last() {
        if biggest > n_max {
            return Err(Error::invalid(format!(
                "capture time {biggest} beyond run end {n_max}"
            )));
        }
    }
    if let Some(b) = &options.bracket {
        if !(b.kappa2.is_finite() && b.kappa2 >= 0.0) {
            return Err(Error::invalid(format!(
                "bracket multiplier must be finite and >= 0, got {}",
                b.kappa2
            )));
        }
        if b.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::invalid("window thresholds must be finite and >= 0"));
        }
    }
    if !(0..=10_000).contains(&options.radius_floor) {
        return Err(Error::invalid(format!(
            "radius floor {} out of range",
            options.radius_floor
        )));
    }
    let radius_at =
        |k: usize| -> i32 { (k as i32).min(active_radius(d, k).max(options.radius_floor)) };
    let r_alloc = radius_at(n_max) + 1;
    let grid = BoxGrid::new(d, r_alloc)?;
    if grid.len() > 250_000_000 {
        return Err(Error::invalid(format!(
            "forward grid would need {} cells; shrink n_max",
            grid.len()
        )));
    }
    let mut strides = [0usize; MAX_DIM];
    let mut s = 1usize;
    for stride in strides.iter_mut().take(d) {
        *stride = s;
        s *= grid.side();
    }
    let inv_steps = 1.0 / (2 * d) as f64;
    let center = grid.index(&[0i32; MAX_DIM]);
    let mut src = vec![0.0f64; grid.len()];
    let mut dst = vec![0.0f64; grid.len()];
    src[center] = 1.0;
    let mut partition = Vec::with_capacity(n_max + 1);
    partition.push(1.0);
    let mut leak = 0.0f64;
    let mut slabs = Vec::with_capacity(want.len());
    let mut steps: Vec<StepRecord> = Vec::new();
    if want.first() == Some(&0) {
        slabs.push(CapturedSlab {
            time: 0,
            grid: BoxGrid::new(d, 0)?,
            values: vec![1.0],
        });
    }
    for k in 1..=n_max {
        let r = radius_at(k);
        let run_len = 2 * r as usize + 1;
        // Pass 1: simple-kernel convolution into the box, tallying the
        // mass that stayed inside.
        let mut conv_mass = NeumaierSum::new();
        grid.for_each_row(r, |base, _| {
            let out = &mut dst[base..base + run_len];
            let sm = &src[base - 1..base - 1 + run_len];
            let sp = &src[base + 1..base + 1 + run_len];
            for i in 0..run_len {
                out[i] = sm[i] + sp[i];
            }
            for &stride in &strides[1..d] {
                let lo = &src[base - stride..base - stride + run_len];
                let hi = &src[base + stride..base + stride + run_len];
                for i in 0..run_len {
                    out[i] += lo[i] + hi[i];
                }
            }
            for o in out.iter_mut() {
                *o *= inv_steps;
                conv_mass.add(*o);
            }
        });
        leak += partition[k - 1] - conv_mass.total();
        if let Some(b) = &options.bracket {
            if k - 1 >= b.from {
                steps.push(bracket_record(k - 1, &grid, &dst, r, run_len, b));
            }
        }
        // Pass 2: disorder weights on the parity-correct cells.  A cell
        // holding exactly zero is unreachable (weights are positive), so
        // its hash is skipped.
        let mut mass = NeumaierSum::new();
        let time = k as u64;
        grid.for_each_row(r, |base, row| {
            let slow_sum: i32 = row[1..d].iter().sum();
            let parity = (k as i32 - slow_sum).rem_euclid(2);
            let mut x0 = -r + (parity + r).rem_euclid(2);
            let mut point: Point = *row;
            let mut i = (x0 + r) as usize;
            while i < run_len {
                let v = dst[base + i];
                if v != 0.0 {
                    point[0] = x0;
                    let w = field.weight_unchecked(time, &point, beta, lambda);
                    let nv = v * w;
                    dst[base + i] = nv;
                    mass.add(nv);
                }
                i += 2;
                x0 += 2;
            }
        });
        partition.push(mass.total());
        std::mem::swap(&mut src, &mut dst);
        if want.binary_search(&k).is_ok() {
            let slab_grid = BoxGrid::new(d, r)?;
            let mut values = vec![0.0f64; slab_grid.len()];
            slab_grid.for_each_row(r, |sbase, row| {
                let big = grid.index(row);
                values[sbase..sbase + run_len].copy_from_slice(&src[big..big + run_len]);
            });
            slabs.push(CapturedSlab { time: k, grid: slab_grid, values });
        }
    }
    Ok(ForwardRun { partition, leak, slabs, steps })
}

/// Reduce one spread plane into its squared-mass totals.  `conv` holds
/// the spread values on the sub-box of radius `r`; cells of the wrong
/// parity are exactly zero and drop out on their own.
fn bracket_record(
    k: usize,
    grid: &BoxGrid,
    conv: &[f64],
    r: i32,
    run_len: usize,
    b: &BracketOptions,
) -> StepRecord {
    let d = grid.d();
    let thresholds: Vec<f64> = b.alphas.iter().map(|a| a * a * k as f64).collect();
    let mut total = NeumaierSum::new();
    let mut window = vec![0.0f64; thresholds.len()];
    grid.for_each_row(r, |base, row| {
        let slow_r2: i32 = row[1..d].iter().map(|c| c * c).sum();
        for (off, &v) in conv[base..base + run_len].iter().enumerate() {
            if v != 0.0 {
                let x0 = -r + off as i32;
                let q2 = v * v;
                total.add(q2);
                let r2 = (slow_r2 + x0 * x0) as f64;
                for (w, t) in window.iter_mut().zip(&thresholds) {
                    if r2 > *t {
                        *w += q2;
                    }
                }
            }
        }
    });
    StepRecord {
        k,
        bracket: b.kappa2 * total.total(),
        window: window.into_iter().map(|w| b.kappa2 * w).collect(),
    }
}
