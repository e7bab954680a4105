mod common;

use proptest::prelude::*;
use resloss::specfun::{bessel_i0, bessel_i0e, bessel_k0, bessel_k0e, digamma};
use resloss::Complex64;

use common::{digamma_series, i0_series, i0e_integral, k0e_integral, log_grid};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn digamma_matches_series_oracle() {
    for z in [
        Complex64::new(0.5, 1.0),
        Complex64::new(3.0, 4.0),
        Complex64::new(0.1, 2.0),
        Complex64::new(7.5, -3.0),
        Complex64::new(1e-3, 0.0),
    ] {
        let got = digamma(z).unwrap();
        let want = digamma_series(z);
        assert!((got - want).norm() / want.norm() < 1e-10, "z = {z}: {got} vs {want}");
    }
}

#[test]
fn digamma_matches_frozen_high_precision_values() {
    // 40-digit mpmath reference values
    let cases = [
        ((0.5, 1.0), (-0.051_761_650_994_412_543, 1.564_940_517_815_879_3)),
        ((3.0, 4.0), (1.550_359_817_333_410_9, 1.010_502_209_186_044_5)),
        ((1e5, -1e5), (11.859_496_555_250_201, -0.785_400_663_401_614_98)),
        ((1e-3, 0.0), (-1000.575_571_931_810_3, 0.0)),
        ((17.25, -0.75), (2.819_547_235_418_152_3, -0.044_733_001_494_806_682)),
    ];
    for ((re, im), (wre, wim)) in cases {
        let got = digamma(Complex64::new(re, im)).unwrap();
        let want = Complex64::new(wre, wim);
        assert!((got - want).norm() / want.norm() < 1e-12, "z = {re}+{im}i: {got}");
    }
}

#[test]
fn bessel_match_integral_oracles_on_log_grid() {
    for x in log_grid(1e-3, 700.0, 100) {
        let i0e = bessel_i0e(x).unwrap();
        assert!(rel(i0e, i0e_integral(x)) < 1e-8, "i0e({x})");
        let k0e = bessel_k0e(x).unwrap();
        assert!(rel(k0e, k0e_integral(x)) < 1e-8, "k0e({x})");
        if x < 700.0 {
            let i0 = bessel_i0(x).unwrap();
            assert!(rel(i0, i0_series(x)) < 1e-8, "i0({x})");
        }
    }
}

#[test]
fn bessel_frozen_values() {
    assert!(rel(bessel_i0(1.0).unwrap(), 1.266_065_877_752_008_4) < 1e-14);
    assert!(rel(bessel_i0(10.0).unwrap(), 2_815.716_628_466_254_4) < 1e-13);
    assert!(rel(bessel_i0(700.0).unwrap(), 1.529_593_347_671_873_7e302) < 1e-12);
    assert!(rel(bessel_k0(1.0).unwrap(), 0.421_024_438_240_708_33) < 1e-14);
    assert!(rel(bessel_k0(9.0).unwrap(), 5.088_131_295_645_924_8e-5) < 1e-12);
    assert!(rel(bessel_k0(700.0).unwrap(), 4.669_776_431_685_376_9e-306) < 1e-10);
}

#[test]
fn bessel_monotonicity() {
    let xs = log_grid(1e-4, 700.0, 2000);
    for w in xs.windows(2) {
        assert!(bessel_i0(w[1]).unwrap() > bessel_i0(w[0]).unwrap());
        assert!(bessel_k0(w[1]).unwrap() < bessel_k0(w[0]).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn digamma_recurrence(re in 0.1f64..50.0, im in -50.0f64..50.0) {
        let z = Complex64::new(re, im);
        let lhs = digamma(z + 1.0).unwrap() - digamma(z).unwrap();
        let rhs = z.inv();
        prop_assert!((lhs - rhs).norm() / rhs.norm() < 1e-10);
    }

    #[test]
    fn digamma_real_axis_is_real(x in 0.01f64..1e6) {
        prop_assert_eq!(digamma(Complex64::new(x, 0.0)).unwrap().im, 0.0);
    }
}
