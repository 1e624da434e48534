//! Extended-exponent floating point.
//!
//! Binomial probability rows for thousands of trials pass through
//! intermediate values far below `f64::MIN_POSITIVE` before climbing back
//! toward the mode.  `ExtFloat` stores a number as `mantissa * 2^exp2`
//! with the mantissa renormalized into a wide safe band, so long products
//! of ratios keep full relative precision with no underflow or overflow.

/// A number `mantissa * 2^exp2` with `mantissa` kept inside
/// `[2^-465, 2^465]` in magnitude (or exactly zero).
#[derive(Clone, Copy, Debug)]
pub struct ExtFloat {
    mantissa: f64,
    exp2: i64,
}

impl ExtFloat {
    pub fn from_f64(x: f64) -> Self {
        let mut v = Self { mantissa: x, exp2: 0 };
        v.renormalize();
        v
    }

    pub fn one() -> Self {
        Self { mantissa: 1.0, exp2: 0 }
    }

    /// Multiply in place by a plain `f64` factor.
    #[inline]
    pub fn mul_f64(&mut self, factor: f64) {
        self.mantissa *= factor;
        // Renormalize lazily: only when the mantissa leaves the safe band.
        if self.mantissa != 0.0 && !(1e-140..=1e140).contains(&self.mantissa.abs()) {
            self.renormalize();
        }
    }

    /// `self * 2^k`.
    #[inline]
    pub fn scale_exp2(&mut self, k: i64) {
        self.exp2 += k;
    }

    /// Raise to a nonnegative integer power by binary exponentiation.
    pub fn powi(mut self, mut n: u64) -> Self {
        let mut out = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul(self);
            }
            self = self.mul(self);
            n >>= 1;
        }
        out
    }

    fn mul(mut self, rhs: Self) -> Self {
        self.mantissa *= rhs.mantissa;
        self.exp2 += rhs.exp2;
        if self.mantissa != 0.0 && !(1e-140..=1e140).contains(&self.mantissa.abs()) {
            self.renormalize();
        }
        self
    }

    fn renormalize(&mut self) {
        if self.mantissa == 0.0 {
            self.exp2 = 0;
            return;
        }
        let bits = self.mantissa.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        if raw_exp == 0 {
            // Subnormal: lift into the normal range first.
            self.mantissa *= f64::powi(2.0, 108);
            self.exp2 -= 108;
            self.renormalize();
            return;
        }
        // Rewrite the mantissa with unbiased binary exponent zero (in [1, 2)).
        let unbiased = raw_exp - 1023;
        let m = f64::from_bits((bits & !(0x7ff << 52)) | (1023 << 52));
        self.mantissa = m;
        self.exp2 += unbiased;
    }

    /// Collapse to `f64`, underflowing to zero / overflowing to infinity.
    pub fn to_f64(&self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        if self.exp2 > 1100 {
            return f64::INFINITY * self.mantissa.signum();
        }
        if self.exp2 < -1150 {
            return 0.0;
        }
        // Split the power so each factor stays representable on its own.
        let half = (self.exp2 / 2) as i32;
        let rest = (self.exp2 - half as i64) as i32;
        self.mantissa * f64::powi(2.0, half) * f64::powi(2.0, rest)
    }

    /// Natural logarithm of the absolute value.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// Base-2 exponent after renormalization; useful for cheap underflow
    /// screening.
    pub fn exponent(&self) -> i64 {
        let mut v = *self;
        v.renormalize();
        v.exp2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_ordinary_values() {
        for &x in &[1.0, 0.5, 3.25e-9, 7.1e100, 2.2e-308, -4.0] {
            let v = ExtFloat::from_f64(x);
            assert_eq!(v.to_f64(), x);
        }
    }

    #[test]
    fn survives_deep_underflow() {
        // (1/2)^3000 * 2^3000 == 1 exactly.
        let mut v = ExtFloat::one();
        for _ in 0..3000 {
            v.mul_f64(0.5);
        }
        v.scale_exp2(3000);
        assert_eq!(v.to_f64(), 1.0);
    }

    #[test]
    fn powi_matches_direct_product() {
        let got = ExtFloat::from_f64(0.3).powi(40).to_f64();
        let want = 0.3f64.powi(40);
        assert!((got - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn powi_tracks_log_for_huge_exponents() {
        // q^8192 for q = 2/3 underflows f64 badly; the log must survive.
        let v = ExtFloat::from_f64(2.0 / 3.0).powi(8192);
        let want = 8192.0 * (2.0f64 / 3.0).ln();
        assert!((v.ln_abs() - want).abs() < 1e-9 * want.abs());
    }
}
