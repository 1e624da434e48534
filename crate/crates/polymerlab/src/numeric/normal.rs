//! Standard-normal quantile and distribution functions.
//!
//! The quantile is Wichura's PPND16 rational approximation (algorithm
//! AS 241), accurate to about 1e-16 over the full open unit interval; it
//! is what turns counter-based uniform hashes into Gaussian disorder.
//! The CDF uses Graeme West's double-precision rational scheme, accurate
//! to ~1e-15, and feeds the Kolmogorov–Smirnov comparisons.

/// Inverse CDF of the standard normal distribution (AS 241, PPND16).
///
/// Returns `-inf` / `+inf` at the endpoints 0 and 1 and `NaN` outside
/// `[0, 1]`.
pub fn standard_normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        // Central region: rational in r = 0.180625 - q^2.
        let r = 0.180625 - q * q;
        let num = poly(
            &[
                3.387_132_872_796_366_608e0,
                1.331_416_678_917_843_774_5e2,
                1.971_590_950_306_551_442_7e3,
                1.373_169_376_550_946_112_5e4,
                4.592_195_393_154_987_145_7e4,
                6.726_577_092_700_870_085_3e4,
                3.343_057_558_358_812_810_5e4,
                2.509_080_928_730_122_672_7e3,
            ],
            r,
        );
        let den = poly(
            &[
                1.0,
                4.231_333_070_160_091_125_2e1,
                6.871_870_074_920_579_083e2,
                5.394_196_021_424_751_107_7e3,
                2.121_379_430_158_659_586_7e4,
                3.930_789_580_009_271_061e4,
                2.872_908_573_572_194_267_4e4,
                5.226_495_278_852_854_561e3,
            ],
            r,
        );
        return q * num / den;
    }

    // Tail regions: rational in r = sqrt(-ln(min(p, 1-p))).
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let num = poly(
            &[
                1.423_437_110_749_683_577_34e0,
                4.630_337_846_156_545_295_9e0,
                5.769_497_221_460_691_405_5e0,
                3.647_848_324_763_204_605_04e0,
                1.270_458_252_452_368_382_58e0,
                2.417_807_251_774_506_117_7e-1,
                2.272_384_498_926_918_458_33e-2,
                7.745_450_142_783_414_076_4e-4,
            ],
            r,
        );
        let den = poly(
            &[
                1.0,
                2.053_191_626_637_758_821_87e0,
                1.676_384_830_183_803_849_4e0,
                6.897_673_349_851_000_045_5e-1,
                1.481_039_764_274_800_745_9e-1,
                1.519_866_656_361_645_719_66e-2,
                5.475_938_084_995_344_946e-4,
                1.050_750_071_644_416_843_24e-9,
            ],
            r,
        );
        num / den
    } else {
        let r = r - 5.0;
        let num = poly(
            &[
                6.657_904_643_501_103_777_2e0,
                5.463_784_911_164_114_369_9e0,
                1.784_826_539_917_291_335_8e0,
                2.965_605_718_285_048_912_3e-1,
                2.653_218_952_657_612_309_3e-2,
                1.242_660_947_388_078_438_6e-3,
                2.711_555_568_743_487_578_15e-5,
                2.010_334_399_292_288_132_65e-7,
            ],
            r,
        );
        let den = poly(
            &[
                1.0,
                5.998_322_065_558_879_376_9e-1,
                1.369_298_809_227_358_053_1e-1,
                1.487_536_129_085_061_485_25e-2,
                7.868_691_311_456_132_591e-4,
                1.846_318_317_510_054_681_8e-5,
                1.421_511_758_316_445_888_7e-7,
                2.044_263_103_389_939_785_64e-15,
            ],
            r,
        );
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// CDF of the standard normal distribution (West's double-precision
/// rational scheme).
pub fn standard_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs();
    if z > 37.0 {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let e = (-z * z / 2.0).exp();
    let tail = if z < 7.071_067_811_865_475 {
        let b = poly(
            &[
                220.206_867_912_376,
                221.213_596_169_931,
                112.079_291_497_871,
                33.912_866_078_383,
                6.373_962_203_531_65,
                0.700_383_064_443_688,
                3.526_249_659_989_11e-2,
            ],
            z,
        );
        let c = poly(
            &[
                440.413_735_824_752,
                793.826_512_519_948,
                637.333_633_378_831,
                296.564_248_779_674,
                86.780_732_202_946_1,
                16.064_177_579_207,
                1.755_667_163_182_64,
                8.838_834_764_831_84e-2,
            ],
            z,
        );
        e * b / c
    } else {
        let mut b = z + 0.65;
        b = z + 4.0 / b;
        b = z + 3.0 / b;
        b = z + 2.0 / b;
        b = z + 1.0 / b;
        e / (b * 2.506_628_274_631_000_5)
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Horner evaluation with coefficients in ascending order.
#[inline]
fn poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_points() {
        assert_eq!(standard_normal_quantile(0.5), 0.0);
        // Values cross-checked against high-precision tables.
        assert!((standard_normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-13);
        assert!((standard_normal_quantile(0.99) - 2.326_347_874_040_841).abs() < 1e-13);
        assert!((standard_normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-11);
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(standard_normal_cdf(0.0), 0.5);
        assert!((standard_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((standard_normal_cdf(-3.0) - 1.349_898_031_630_094_6e-3).abs() < 1e-16);
        assert!((standard_normal_cdf(8.0) - (1.0 - 6.220_960_574_271_78e-16)).abs() < 1e-17);
    }

    #[test]
    fn quantile_and_cdf_are_mutual_inverses() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = standard_normal_quantile(p);
            assert!(
                (standard_normal_cdf(x) - p).abs() < 1e-12,
                "roundtrip failed at p = {p}"
            );
        }
        // Deep tails.
        for &p in &[1e-12, 1e-9, 1e-6, 1.0 - 1e-6, 1.0 - 1e-9] {
            let x = standard_normal_quantile(p);
            let back = standard_normal_cdf(x);
            assert!((back - p).abs() <= 1e-12 * p.max(1.0 - p).max(1e-3));
        }
    }

    #[test]
    fn quantile_is_antisymmetric() {
        for i in 1..100 {
            let p = i as f64 / 200.0;
            let a = standard_normal_quantile(p);
            let b = standard_normal_quantile(1.0 - p);
            assert!((a + b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(standard_normal_quantile(-0.1).is_nan());
        assert!(standard_normal_quantile(1.1).is_nan());
        assert_eq!(standard_normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(standard_normal_quantile(1.0), f64::INFINITY);
    }
}
