//! Power-law extrapolation of slowly converging sequences.

use crate::error::{Error, Result};

/// Solve a small dense linear system in place (Gaussian elimination with
/// partial pivoting).  Sized for the 3x3 systems of the extrapolators.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty system");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::domain("singular extrapolation system".to_string()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s -= a[col][j] * b[j];
        }
        b[col] = s / a[col][col];
    }
    Ok(())
}

/// Limit of `y(n) = c0 + c1 n^{-e_1} + ... + ck n^{-e_k}` from exactly
/// `k + 1` samples `(n, y(n))`.  Returns `c0`.
///
/// The exponents must be positive and strictly increasing; the sample
/// points must be distinct.  This is the generic Richardson step used to
/// strip the known finite-size corrections from overlap sums.
pub fn richardson_limit(samples: &[(f64, f64)], exponents: &[f64]) -> Result<f64> {
    let k = exponents.len();
    if samples.len() != k + 1 {
        return Err(Error::invalid(format!(
            "need {} samples for {} correction exponents, got {}",
            k + 1,
            k,
            samples.len()
        )));
    }
    if exponents.windows(2).any(|w| w[0] >= w[1]) || exponents.iter().any(|&e| e <= 0.0) {
        return Err(Error::invalid("exponents must be positive increasing".to_string()));
    }
    let mut a: Vec<Vec<f64>> = samples
        .iter()
        .map(|&(n, _)| {
            if !(n > 0.0) {
                return Err(Error::invalid(format!("sample point n = {n} must be positive")));
            }
            let mut row = vec![1.0];
            row.extend(exponents.iter().map(|&e| n.powf(-e)));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut b: Vec<f64> = samples.iter().map(|&(_, y)| y).collect();
    solve_dense(&mut a, &mut b)?;
    Ok(b[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        // y(n) = 3 - 2/sqrt(n) + 5/n^{3/2}
        let y = |n: f64| 3.0 - 2.0 / n.sqrt() + 5.0 / n.powf(1.5);
        let samples = [(64.0, y(64.0)), (128.0, y(128.0)), (256.0, y(256.0))];
        let c0 = richardson_limit(&samples, &[0.5, 1.5]).unwrap();
        assert!((c0 - 3.0).abs() < 1e-10, "c0 = {c0}");
    }

    #[test]
    fn beats_raw_truncation_on_contaminated_data() {
        // An extra n^{-5/2} term the basis does not model: the limit
        // should still come out far closer than the last raw sample.
        let y = |n: f64| 1.5 - 0.8 / n.sqrt() + 2.0 / n.powf(1.5) - 3.0 / n.powf(2.5);
        let samples = [(100.0, y(100.0)), (200.0, y(200.0)), (400.0, y(400.0))];
        let c0 = richardson_limit(&samples, &[0.5, 1.5]).unwrap();
        let raw_gap = (y(400.0) - 1.5).abs();
        assert!((c0 - 1.5).abs() < raw_gap / 100.0);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(richardson_limit(&[(1.0, 0.0)], &[0.5]).is_err());
        assert!(richardson_limit(&[(1.0, 0.0), (2.0, 0.0)], &[0.5, 1.5]).is_err());
        assert!(richardson_limit(&[(1.0, 0.0), (2.0, 0.0), (4.0, 0.0)], &[1.5, 0.5]).is_err());
        assert!(richardson_limit(&[(-1.0, 0.0), (2.0, 0.0)], &[0.5]).is_err());
    }
}
