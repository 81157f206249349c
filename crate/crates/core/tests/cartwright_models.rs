mod common;

use common::c;
use etp_core::cartwright::{
    check_indicator_algebra, density_from_zeros, estimate_density, estimate_indicator, radius_ladder,
    width_and_prediction, Sector, LADDER_RATIO,
};
use etp_core::zerofind::ZeroFindOptions;
use etp_core::Complex64;
use proptest::prelude::*;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_6, PI};

fn sin2(k: Complex64) -> Complex64 {
    (2.0 * k).sin()
}

#[test]
fn indicator_of_sine() {
    let ladder = radius_ladder(5.0, 200.0, LADDER_RATIO).unwrap();
    let thetas = [0.0, FRAC_PI_6, FRAC_PI_2, 5.0 * FRAC_PI_6, -FRAC_PI_2, -FRAC_PI_6];
    let ind = estimate_indicator(&sin2, &thetas, &ladder).unwrap();
    for ray in &ind.rays {
        let exact = 2.0 * ray.theta.sin().abs();
        assert!((ray.h - exact).abs() <= 0.05 * exact.max(1.0), "θ={} h={}", ray.theta, ray.h);
    }
    let w = width_and_prediction(&ind).unwrap();
    assert!((w.d - 4.0).abs() < 0.05);
    assert!((w.prediction - FRAC_2_PI).abs() < 0.01);
}

#[test]
fn sine_zero_density_on_real_axis() {
    let ladder = radius_ladder(1.0, 80.0, LADDER_RATIO).unwrap();
    let sector = Sector::about_real_axis(0.1).unwrap();
    let opts = ZeroFindOptions::default();
    let d = estimate_density(&sin2, sector, &ladder, 0.25, &opts).unwrap();
    assert!((d.slope - FRAC_2_PI).abs() <= 0.05 * FRAC_2_PI, "slope {}", d.slope);
    // Counts are exact: zeros at nπ/2 for n ≥ 1.
    for (r, n) in d.radii.iter().zip(&d.counts) {
        let expected = (r / FRAC_PI_2).floor() as usize;
        assert_eq!(*n, expected, "r={r}");
    }
    // The same count from an explicit zero list.
    let zeros: Vec<(Complex64, u32)> = (1..60).map(|n| (c(n as f64 * FRAC_PI_2, 0.0), 1)).collect();
    let e = density_from_zeros(&zeros, sector, &ladder, 0.25);
    assert_eq!(e.counts, d.counts);
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("r,N,N/r"));
}

#[test]
fn off_axis_sector_is_empty() {
    let ladder = radius_ladder(1.0, 60.0, LADDER_RATIO).unwrap();
    let sector = Sector::new(0.3, PI - 0.3).unwrap();
    let d = estimate_density(&sin2, sector, &ladder, 0.25, &ZeroFindOptions::default()).unwrap();
    assert!(d.counts.iter().all(|&n| n == 0));
    assert_eq!(d.slope, 0.0);
}

#[test]
fn polynomial_factor_keeps_density() {
    let f = |k: Complex64| k * (2.0 * k).sin();
    let ladder = radius_ladder(1.0, 80.0, LADDER_RATIO).unwrap();
    let sector = Sector::about_real_axis(0.1).unwrap();
    let opts = ZeroFindOptions::default();
    let a = estimate_density(&f, sector, &ladder, 0.25, &opts).unwrap();
    let b = estimate_density(&sin2, sector, &ladder, 0.25, &opts).unwrap();
    assert_eq!(a.counts, b.counts);
}

#[test]
fn indicator_algebra_on_exponential_models() {
    // The product grows like e^{5r}; stay below the f64 range.
    let ladder = radius_ladder(5.0, 120.0, LADDER_RATIO).unwrap();
    let thetas: Vec<f64> = (0..12).map(|i| -PI + (i as f64 + 0.5) * PI / 6.0).collect();
    let g = |k: Complex64| (c(0.0, 3.0) * k).exp();
    let fg = |k: Complex64| sin2(k) * g(k);
    let fsum = |k: Complex64| sin2(k) + g(k);
    let hf = estimate_indicator(&sin2, &thetas, &ladder).unwrap();
    let hg = estimate_indicator(&g, &thetas, &ladder).unwrap();
    let hfg = estimate_indicator(&fg, &thetas, &ladder).unwrap();
    let hsum = estimate_indicator(&fsum, &thetas, &ladder).unwrap();
    let rep = check_indicator_algebra(&hf, &hg, &hfg, &hsum, 0.05).unwrap();
    assert!(rep.passed(), "{rep:?}");
    // For a product with an exponential the inequality is an equality.
    assert!(rep.max_product_gap() < 0.05, "{}", rep.max_product_gap());
    for ray in &hg.rays {
        assert!((ray.h + 3.0 * ray.theta.sin()).abs() < 1e-9);
    }

    // f + (−f) vanishes identically; its indicator is −∞ and still satisfies
    // both inequalities.
    let neg = |k: Complex64| -sin2(k);
    let zero = |k: Complex64| sin2(k) + neg(k);
    let hneg = estimate_indicator(&neg, &thetas, &ladder).unwrap();
    let hzero = estimate_indicator(&zero, &thetas, &ladder).unwrap();
    assert!(hzero.rays.iter().all(|r| r.h == f64::NEG_INFINITY));
    let hprod = estimate_indicator(&|k: Complex64| sin2(k) * neg(k), &thetas, &ladder).unwrap();
    assert!(check_indicator_algebra(&hf, &hneg, &hprod, &hzero, 0.05).unwrap().passed());
}

#[test]
fn indicator_export() {
    let ladder = radius_ladder(5.0, 50.0, LADDER_RATIO).unwrap();
    let ind = estimate_indicator(&sin2, &[0.0, FRAC_PI_2], &ladder).unwrap();
    let mut buf = Vec::new();
    ind.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("theta,h,oscillation"));
    assert_eq!(text.lines().count(), 3);
    let back: etp_core::cartwright::IndicatorEstimate = serde_json::from_str(&ind.to_json().unwrap()).unwrap();
    assert_eq!(back, ind);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn real_coefficients_give_symmetric_indicator(a in 0.2f64..3.0, b in 0.2f64..3.0, theta in 0.05f64..3.1) {
        // Real on the real axis, so |f(k̄)| = |f(k)|.
        let f = move |k: Complex64| (a * k).sin() * (b * k).cos() + k;
        let ladder = radius_ladder(5.0, 120.0, LADDER_RATIO).unwrap();
        let ind = estimate_indicator(&f, &[theta, -theta], &ladder).unwrap();
        prop_assert!((ind.rays[0].h - ind.rays[1].h).abs() < 1e-9);
        let exact = (a + b) * theta.sin();
        prop_assert!((ind.rays[0].h - exact).abs() < 0.05 * exact.max(1.0));
    }
}
