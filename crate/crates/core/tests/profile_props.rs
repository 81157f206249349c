mod common;

use common::BLENDED_XI_OUTER;
use etp_core::profile::smoothstep5;
use etp_core::{Error, LiouvilleMap, PieceConfig, ProfileConfig, RadialProfile, TransformedPotential};
use proptest::prelude::*;

fn blended() -> RadialProfile {
    RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.1).unwrap()
}

fn smooth_bump(height: f64, width: f64) -> RadialProfile {
    // Plateau of height 1 + h on [1, 1 + width], blended over 0.2·width.
    RadialProfile::new(ProfileConfig {
        cavity_radius: 1.0,
        outer_radius: 3.0,
        pieces: vec![PieceConfig {
            from: 1.0,
            to: 1.0 + width,
            coeffs: vec![1.0 + height],
        }],
        blend_width: 0.2 * width,
    })
    .unwrap()
}

#[test]
fn blended_shell_optical_length() {
    let map = LiouvilleMap::new(&blended()).unwrap();
    assert!((map.xi_outer() - BLENDED_XI_OUTER).abs() < 1e-9);
}

#[test]
fn quintic_blend_is_c2() {
    // smoothstep5(t) = 10t³ − 15t⁴ + 6t⁵
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        let (s, ds, d2s) = smoothstep5(t);
        assert!((s - (10.0 * t.powi(3) - 15.0 * t.powi(4) + 6.0 * t.powi(5))).abs() < 1e-14);
        assert!((ds - 30.0 * t * t * (1.0 - t) * (1.0 - t)).abs() < 1e-13);
        assert!((d2s - 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)).abs() < 1e-12);
    }
    assert!(blended().is_smooth());
    assert!(!RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.0).unwrap().is_smooth());
}

#[test]
fn sharp_profile_has_no_potential() {
    let p = RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.0).unwrap();
    assert!(matches!(TransformedPotential::new(&p), Err(Error::NotSmooth)));
}

#[test]
fn invalid_profiles_name_the_field() {
    let bad = |cfg: ProfileConfig| match RadialProfile::new(cfg) {
        Err(Error::InvalidProfile { field, .. }) => field,
        other => panic!("expected a profile error, got {other:?}"),
    };
    let base = blended().config().clone();
    assert_eq!(bad(ProfileConfig { outer_radius: 0.5, ..base.clone() }), "R0");
    assert_eq!(bad(ProfileConfig { blend_width: -0.1, ..base.clone() }), "blend_width");
    let mut negative = base.clone();
    negative.pieces[0].coeffs = vec![-2.0];
    assert_eq!(bad(negative), "pieces");
    let mut inside = base;
    inside.pieces[0].from = 0.5;
    assert_eq!(bad(inside), "pieces[0].from");
}

#[test]
fn potential_vanishes_off_support_for_l0() {
    let pot = TransformedPotential::new(&blended()).unwrap();
    let map = pot.map();
    for r in [0.5, 2.5, 2.9] {
        let xi = map.eval_xi(r).unwrap();
        assert!(pot.eval_q(xi, 0).unwrap().abs() < 1e-12);
    }
    // On the plateau n is constant, so only the centrifugal mismatch remains.
    let xi = map.eval_xi(1.5).unwrap();
    let t = pot.terms(xi, 0).unwrap();
    assert!(t.curvature.abs() < 1e-12 && t.gradient.abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optical_length_is_monotone(r1 in 0.0f64..3.0, r2 in 0.0f64..3.0) {
        let map = LiouvilleMap::new(&blended()).unwrap();
        let (a, b) = (r1.min(r2), r1.max(r2));
        prop_assert!(map.eval_xi(a).unwrap() <= map.eval_xi(b).unwrap());
        // ξ' = √n ≥ 1 here.
        prop_assert!(map.eval_xi(b).unwrap() - map.eval_xi(a).unwrap() >= (b - a) * (1.0 - 1e-9));
    }

    #[test]
    fn optical_length_round_trip(r in 0.0f64..3.0, height in 0.2f64..6.0, width in 0.4f64..1.5) {
        let p = smooth_bump(height, width);
        let map = LiouvilleMap::new(&p).unwrap();
        let xi = map.eval_xi(r).unwrap();
        prop_assert!((map.invert_xi(xi).unwrap() - r).abs() < 1e-9);
    }

    #[test]
    fn index_is_positive_and_background_outside(r in 0.0f64..3.0, height in -0.8f64..6.0) {
        let p = smooth_bump(height, 1.0);
        let n = p.eval_n(r);
        prop_assert!(n > 0.0);
        if r < p.support_lo() || r >= p.support_hi() {
            prop_assert_eq!(n, 1.0);
        }
    }
}
