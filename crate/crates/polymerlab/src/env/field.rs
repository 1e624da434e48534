//! Counter-based environment field.
//!
//! Each disorder value is a pure function of `(seed, time, site)`: the
//! site coordinates are packed into 16-bit two's-complement lanes, the
//! words are absorbed into a SplitMix64-style avalanche chain, and the
//! final 64-bit state maps to a uniform in the open unit interval which
//! the family's quantile transform converts to a disorder draw.  There is
//! no sequential generator state anywhere, so evaluation order and thread
//! scheduling can never change a value.

use crate::env::DisorderFamily;
use crate::error::{Error, Result};
use crate::grid::Point;
use crate::walk::Dimension;

/// Largest coordinate magnitude (exclusive) representable in a 16-bit
/// packing lane.
pub const COORD_LIMIT: i32 = 1 << 15;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a full-avalanche bijection on 64-bit words.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Map 64 hash bits to a uniform double in the *open* interval (0, 1):
/// the top 52 bits, offset by half a grid cell.  (With 53 bits the top
/// value `1 - 2^-54` would round to exactly 1.0.)
#[inline]
pub fn u64_to_unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// A reproducible i.i.d. disorder field over `(time, site)` pairs.
#[derive(Clone, Copy, Debug)]
pub struct EnvironmentField {
    seed: u64,
    family: DisorderFamily,
    d: Dimension,
    base: u64,
}

impl EnvironmentField {
    pub fn new(seed: u64, family: DisorderFamily, d: Dimension) -> Result<Self> {
        family.validate()?;
        Ok(Self { seed, family, d, base: mix(seed.wrapping_add(GOLDEN)) })
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn family(&self) -> DisorderFamily {
        self.family
    }

    #[inline]
    pub fn dimension(&self) -> Dimension {
        self.d
    }

    /// Pack active coordinates into 16-bit lanes across two words (the
    /// second word is only populated for d = 5).
    #[inline]
    fn pack(&self, x: &Point) -> (u64, u64) {
        let d = self.d.get();
        let mut lo = 0u64;
        for j in 0..d.min(4) {
            lo |= ((x[j] as i16 as u16) as u64) << (16 * j);
        }
        let hi = if d == 5 { (x[4] as i16 as u16) as u64 } else { 0 };
        (lo, hi)
    }

    /// Raw 64-bit hash of a time-site pair (range-unchecked).
    #[inline]
    pub(crate) fn raw_hash_unchecked(&self, time: u64, x: &Point) -> u64 {
        let (lo, hi) = self.pack(x);
        let mut h = mix(self.base ^ time);
        h = mix(h ^ lo);
        if self.d.get() == 5 {
            h = mix(h ^ hi);
        }
        h
    }

    /// Uniform draw in (0, 1) for a time-site pair (range-unchecked).
    #[inline]
    pub(crate) fn uniform_unchecked(&self, time: u64, x: &Point) -> f64 {
        u64_to_unit_open(self.raw_hash_unchecked(time, x))
    }

    /// Disorder value at a time-site pair (range-unchecked; callers must
    /// guarantee `|x_j| < 2^15`, as all slab sweeps do by construction).
    #[inline]
    pub(crate) fn omega_unchecked(&self, time: u64, x: &Point) -> f64 {
        self.family.draw(self.uniform_unchecked(time, x))
    }

    /// Disorder value `omega(time, x)`, with coordinate range checking.
    pub fn omega(&self, time: u64, x: &Point) -> Result<f64> {
        for &c in &x[..self.d.get()] {
            if c.abs() >= COORD_LIMIT {
                return Err(Error::SiteRange(c as i64));
            }
        }
        Ok(self.omega_unchecked(time, x))
    }

    /// Normalized polymer weight `exp(beta omega - lambda)` at a
    /// time-site pair (range-unchecked).
    #[inline]
    pub(crate) fn weight_unchecked(&self, time: u64, x: &Point, beta: f64, lambda: f64) -> f64 {
        (beta * self.omega_unchecked(time, x) - lambda).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MAX_DIM;
    use crate::numeric::NeumaierSum;

    fn d3() -> Dimension {
        Dimension::new(3).unwrap()
    }

    fn gaussian_field(seed: u64) -> EnvironmentField {
        EnvironmentField::new(seed, DisorderFamily::StandardGaussian, d3()).unwrap()
    }

    #[test]
    fn evaluation_is_deterministic() {
        let f = gaussian_field(42);
        let x: Point = [3, -7, 11, 0, 0];
        let a = f.omega(5, &x).unwrap();
        let b = f.omega(5, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn distinct_inputs_decorrelate() {
        let f = gaussian_field(42);
        let g = gaussian_field(43);
        let x: Point = [3, -7, 11, 0, 0];
        let y: Point = [3, -7, 12, 0, 0];
        let base = f.omega(5, &x).unwrap();
        assert_ne!(base, f.omega(6, &x).unwrap());
        assert_ne!(base, f.omega(5, &y).unwrap());
        assert_ne!(base, g.omega(5, &x).unwrap());
    }

    #[test]
    fn coordinate_range_is_enforced() {
        let f = gaussian_field(1);
        let ok: Point = [COORD_LIMIT - 1, 0, 0, 0, 0];
        let bad: Point = [COORD_LIMIT, 0, 0, 0, 0];
        let bad_neg: Point = [-COORD_LIMIT, 0, 0, 0, 0];
        assert!(f.omega(0, &ok).is_ok());
        assert!(f.omega(0, &bad).is_err());
        assert!(f.omega(0, &bad_neg).is_err());
    }

    #[test]
    fn unit_interval_mapping_is_open() {
        assert!(u64_to_unit_open(0) > 0.0);
        assert!(u64_to_unit_open(u64::MAX) < 1.0);
        assert!((u64_to_unit_open(1 << 63) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sample_mean_and_variance_match_family() {
        let f = gaussian_field(7);
        let n = 1_000_000u64;
        let mut mean = NeumaierSum::new();
        let mut sq = NeumaierSum::new();
        let mut x = [0i32; MAX_DIM];
        for i in 0..n {
            // Spread sites over a large box; time varies too.
            x[0] = (i % 101) as i32 - 50;
            x[1] = ((i / 101) % 101) as i32 - 50;
            x[2] = ((i / 10_201) % 101) as i32 - 50;
            let w = f.omega_unchecked(i % 64, &x);
            mean.add(w);
            sq.add(w * w);
        }
        let m = mean.total() / n as f64;
        let v = sq.total() / n as f64 - m * m;
        // 4 sigma bands for N = 1e6 standard normal draws.
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "mean = {m}");
        assert!((v - 1.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt(), "var = {v}");
    }

    #[test]
    fn neighbor_values_are_uncorrelated() {
        let f = gaussian_field(11);
        let n = 100_000u64;
        let mut xy = NeumaierSum::new();
        let mut x = [0i32; MAX_DIM];
        for i in 0..n {
            x[0] = (i % 317) as i32 - 150;
            x[1] = ((i / 317) % 317) as i32 - 150;
            x[2] = (i / 100_489) as i32;
            let a = f.omega_unchecked(3, &x);
            let mut shifted = x;
            shifted[0] += 1;
            let b = f.omega_unchecked(3, &shifted);
            xy.add(a * b);
        }
        let corr = xy.total() / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn parallel_evaluation_is_bitwise_stable() {
        use rayon::prelude::*;
        let f = gaussian_field(99);
        let pts: Vec<Point> = (-20..=20)
            .flat_map(|a| (-20..=20).map(move |b| [a, b, a - b, 0, 0]))
            .collect();
        let serial: Vec<u64> = pts.iter().map(|p| f.omega(9, p).unwrap().to_bits()).collect();
        let parallel: Vec<u64> = pts
            .par_iter()
            .map(|p| f.omega(9, p).unwrap().to_bits())
            .collect();
        assert_eq!(serial, parallel);
        // Reversed order, chunked: still identical values per point.
        let mut reversed: Vec<(usize, u64)> = pts
            .par_iter()
            .enumerate()
            .rev()
            .map(|(i, p)| (i, f.omega(9, p).unwrap().to_bits()))
            .collect();
        reversed.sort_unstable_by_key(|&(i, _)| i);
        let rev_bits: Vec<u64> = reversed.into_iter().map(|(_, b)| b).collect();
        assert_eq!(serial, rev_bits);
    }

    #[test]
    fn d5_uses_fifth_coordinate() {
        let d5 = Dimension::new(5).unwrap();
        let f = EnvironmentField::new(5, DisorderFamily::StandardGaussian, d5).unwrap();
        let a: Point = [1, 2, 3, 4, 5];
        let b: Point = [1, 2, 3, 4, 6];
        assert_ne!(f.omega(0, &a).unwrap(), f.omega(0, &b).unwrap());
    }

    #[test]
    fn marginal_law_passes_ks_at_one_percent() {
        // One-sample KS against the family CDF for the continuous
        // families; atom-frequency sup for the discrete ones.  The 1%
        // asymptotic critical value is 1.6276 / sqrt(n).
        let n = 1_000_000usize;
        let crit = 1.6276 / (n as f64).sqrt();
        let families = [
            DisorderFamily::StandardGaussian,
            DisorderFamily::ShiftedExponential { rate: 2.0 },
            DisorderFamily::Rademacher,
            DisorderFamily::CenteredBernoulli { p: 0.3 },
        ];
        for fam in families {
            let f = EnvironmentField::new(2024, fam, d3()).unwrap();
            let mut x = [0i32; MAX_DIM];
            let mut draws: Vec<f64> = Vec::with_capacity(n);
            for i in 0..n {
                x[0] = (i % 211) as i32 - 105;
                x[1] = ((i / 211) % 211) as i32 - 105;
                x[2] = (i / 44_521) as i32 - 11;
                draws.push(f.omega_unchecked((i % 128) as u64, &x));
            }
            let stat = if let Some(atoms) = fam.atoms() {
                // Sup over atoms of |empirical cdf - cdf| (both one-sided
                // limits coincide with frequency sums for step CDFs).
                let mut worst = 0.0f64;
                for (value, cum) in atoms {
                    let frac =
                        draws.iter().filter(|&&w| w <= value).count() as f64 / n as f64;
                    worst = worst.max((frac - cum).abs());
                }
                worst
            } else {
                draws.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let mut worst = 0.0f64;
                for (i, &w) in draws.iter().enumerate() {
                    let fx = fam.cdf(w);
                    let hi = (i + 1) as f64 / n as f64 - fx;
                    let lo = fx - i as f64 / n as f64;
                    worst = worst.max(hi.max(lo));
                }
                worst
            };
            assert!(stat < crit, "{fam}: KS statistic {stat:.5} >= {crit:.5}");
        }
    }
}
