//! Summary statistics and distribution tests for the campaign harness.
//!
//! Everything here is deterministic and order-pinned: per-replicate
//! scalars travel as `(id, value)` pairs, shards merge by id, and every
//! moment is computed in one fixed ascending-id pass with compensated
//! accumulation, so a campaign sharded across any number of workers
//! reproduces the single-threaded numbers bitwise.  The
//! Kolmogorov–Smirnov machinery is self-contained: sorted-sample sup
//! distances plus asymptotic critical values from the Kolmogorov tail
//! series.

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Per-replicate scalars keyed by replicate id, the mergeable unit of
/// every campaign statistic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Shard {
    pairs: Vec<(u64, f64)>,
}

impl Shard {
    pub fn new() -> Self {
        Self { pairs: Vec::new() }
    }

    /// Collect `(id, value)` pairs in any order.
    pub fn from_pairs(mut pairs: Vec<(u64, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        Self { pairs }
    }

    pub fn push(&mut self, id: u64, value: f64) {
        match self.pairs.last() {
            Some(&(last, _)) if last >= id => {
                let at = self.pairs.partition_point(|p| p.0 < id);
                self.pairs.insert(at, (id, value));
            }
            _ => self.pairs.push((id, value)),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Id-ordered merge; the result is independent of which side held
    /// which ids.
    pub fn merge(mut self, mut other: Shard) -> Shard {
        self.pairs.append(&mut other.pairs);
        self.pairs.sort_by_key(|p| p.0);
        self
    }

    /// Values in ascending id order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.1)
    }

    /// Values ascending by magnitude, for distribution tests.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Fixed-order moment pass over the id-sorted values.
    pub fn summary(&self) -> Result<Summary> {
        let n = self.pairs.len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "summary needs at least 2 values, got {n}"
            )));
        }
        let mut acc = NeumaierSum::new();
        for v in self.values() {
            if !v.is_finite() {
                return Err(Error::domain(format!("non-finite sample value {v}")));
            }
            acc.add(v);
        }
        let mean = acc.total() / n as f64;
        let mut m2 = NeumaierSum::new();
        let mut m3 = NeumaierSum::new();
        let mut m4 = NeumaierSum::new();
        for v in self.values() {
            let c = v - mean;
            let c2 = c * c;
            m2.add(c2);
            m3.add(c2 * c);
            m4.add(c2 * c2);
        }
        let nf = n as f64;
        let m2 = m2.total() / nf;
        let m3 = m3.total() / nf;
        let m4 = m4.total() / nf;
        let variance = m2 * nf / (nf - 1.0);
        let (skewness, kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2))
        } else {
            (0.0, 0.0)
        };
        Ok(Summary {
            count: n,
            mean,
            variance,
            skewness,
            kurtosis,
        })
    }
}

/// Moments of one statistic across replicates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n-1 denominator) sample variance.
    pub variance: f64,
    /// Standardized third central moment (population normalization).
    pub skewness: f64,
    /// Standardized fourth central moment; 3 for a Gaussian.
    pub kurtosis: f64,
}

impl Summary {
    pub fn sd(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }

    /// Standard error of the sample mean.
    pub fn mean_se(&self) -> f64 {
        self.sd() / (self.count as f64).sqrt()
    }

    /// Relative standard error of the sample variance,
    /// `sqrt((kurtosis - 1) / n)`, from the delta method.
    pub fn variance_rel_se(&self) -> f64 {
        ((self.kurtosis - 1.0).max(0.0) / self.count as f64).sqrt()
    }
}

/// Sup distance between the empirical law of `sorted` (ascending) and
/// the continuous CDF `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("KS distance of an empty sample".to_string()));
    }
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::domain(format!("non-finite sample value {x}")));
        }
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        sup = sup.max(lo).max(hi);
    }
    Ok(sup)
}

/// Two-sample sup distance between the empirical laws of two ascending
/// samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("two-sample KS needs both samples nonempty".to_string()));
    }
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        if !x.is_finite() {
            return Err(Error::domain(format!("non-finite sample value {x}")));
        }
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// Upper tail of the Kolmogorov distribution,
/// `P(sup |B(t)| > c) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 c^2)`.
fn kolmogorov_tail(c: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    let mut acc = 0.0f64;
    for j in 1..200 {
        let term = (-2.0 * (j * j) as f64 * c * c).exp();
        if term < 1e-18 {
            break;
        }
        acc += if j % 2 == 1 { term } else { -term };
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// Scale constant `c(level)` with `P(K > c) = level` for the asymptotic
/// Kolmogorov law, solved by bisection.
pub fn kolmogorov_critical_scale(level: f64) -> Result<f64> {
    if !(level.is_finite() && 0.0 < level && level < 1.0) {
        return Err(Error::invalid(format!("level must be in (0, 1), got {level}")));
    }
    let (mut lo, mut hi) = (1e-3f64, 4.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_tail(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Asymptotic one-sample KS critical value at `level` for `n` points.
pub fn ks_critical(level: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("KS critical value needs n >= 1".to_string()));
    }
    Ok(kolmogorov_critical_scale(level)? / (n as f64).sqrt())
}

/// Asymptotic two-sample KS critical value at `level` for sample sizes
/// `n` and `m`.
pub fn ks_two_sample_critical(level: f64, n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("two-sample KS critical value needs n, m >= 1".to_string()));
    }
    let scale = ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    Ok(kolmogorov_critical_scale(level)? * scale)
}

/// SplitMix64 stream for the synthetic null model: a tiny, well-mixed
/// generator whose whole state is one `u64`, fully reproducible from the
/// harness seed.
#[derive(Clone, Debug)]
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on the open unit interval.
    pub fn next_unit(&mut self) -> f64 {
        crate::env::u64_to_unit_open(self.next_u64())
    }

    /// Standard normal via the quantile transform.
    pub fn next_normal(&mut self) -> f64 {
        crate::numeric::standard_normal_quantile(self.next_unit())
    }
}
