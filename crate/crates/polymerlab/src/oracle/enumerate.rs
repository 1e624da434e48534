//! Brute-force overlap expectation by full path-pair enumeration.

use crate::grid::MAX_DIM;
use crate::numeric::NeumaierSum;
use crate::walk::Dimension;

/// `E[exp(lambda2 * overlap)]` over all ordered pairs of `n`-step simple
/// walk paths, by exhaustive enumeration — `(2d)^{2n}` pairs, so keep
/// `n` tiny.  This is the independent ground truth the overlap dynamic
/// program is validated against.
pub fn enumerate_second_moment(d: Dimension, lambda2: f64, n: usize) -> f64 {
    let dd = d.get();
    let steps = 2 * dd;
    assert!(n >= 1 && n <= 8, "enumeration supports 1 <= n <= 8");
    let total = steps.pow(n as u32);
    assert!(total <= 1 << 14, "enumeration would blow up: {total} paths");
    // Each path becomes its sequence of positions, one packed u64 per
    // time (7 bits per signed coordinate, |coord| <= n <= 8).
    let mut keys = vec![[0u64; 8]; total];
    for (idx, key) in keys.iter_mut().enumerate() {
        let mut rem = idx;
        let mut pos = [0i64; MAX_DIM];
        for slot in key.iter_mut().take(n) {
            let digit = rem % steps;
            rem /= steps;
            let axis = digit / 2;
            pos[axis] += if digit % 2 == 0 { 1 } else { -1 };
            let mut packed = 0u64;
            for &c in pos.iter().take(dd) {
                packed = (packed << 7) | ((c + 64) as u64);
            }
            *slot = packed;
        }
    }
    let weight: Vec<f64> = (0..=n).map(|l| (lambda2 * l as f64).exp()).collect();
    let mut acc = NeumaierSum::new();
    for a in &keys {
        for b in &keys {
            let mut overlap = 0usize;
            for t in 0..n {
                overlap += (a[t] == b[t]) as usize;
            }
            acc.add(weight[overlap]);
        }
    }
    acc.total() / (total as f64 * total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OverlapTable;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn one_step_closed_form() {
        for d in [3usize, 4, 5] {
            let l2 = 0.37;
            let got = enumerate_second_moment(dim(d), l2, 1);
            let want = 1.0 + l2.exp_m1() / (2 * d) as f64;
            assert!((got - want).abs() < 1e-14, "d = {d}");
        }
    }

    #[test]
    fn dynamic_program_agrees_with_enumeration() {
        for (d, n, l2) in [(3usize, 4usize, 0.3f64), (4, 3, 0.2), (5, 2, 0.45)] {
            let brute = enumerate_second_moment(dim(d), l2, n);
            let table = OverlapTable::build(dim(d), l2, n).unwrap();
            let dp = table.second_moment(n).unwrap();
            assert!(
                (brute - dp).abs() < 1e-13 * brute,
                "d = {d}, n = {n}: brute {brute} vs dp {dp}"
            );
        }
    }

    #[test]
    fn zero_tilt_is_exactly_one() {
        let got = enumerate_second_moment(dim(3), 0.0, 3);
        assert!((got - 1.0).abs() < 1e-14);
    }
}
