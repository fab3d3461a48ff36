mod common;

use morrey_core::geometry::{Axis, Point};
use morrey_core::shape::*;
use proptest::prelude::*;

#[test]
fn combination_matches_brute_force_on_small_grids() {
    let mut rng = common::rng(7);
    for _ in 0..10 {
        let u0 = common::random_quasiconcave(&mut rng, 4, 1.0, false);
        let u1 = common::random_quasiconcave(&mut rng, 4, 1.0, false);
        assert!(u0.values().iter().filter(|&&v| v > 0.0).count() >= 10);
        for rho in [0.25, 0.5] {
            let ur = minkowski_combination(&u0, &u1, rho).unwrap();
            let brute = common::brute_force_combination(&u0, &u1, rho, &ur).unwrap();
            assert_eq!(ur.values(), brute.as_slice(), "rho = {rho}");
        }
    }
}

#[test]
fn level_sets_are_combined_masks() {
    let mut rng = common::rng(11);
    let u0 = common::random_quasiconcave(&mut rng, 4, 1.0, false);
    let u1 = common::random_quasiconcave(&mut rng, 4, 1.0, false);
    let ur = minkowski_combination(&u0, &u1, 0.25).unwrap();
    for j in 0..LADDER_LEVELS {
        let t = j as f64 / LADDER_LEVELS as f64;
        let direct = minkowski_combine_masks(&superlevel_mask(&u0, t).unwrap(), &superlevel_mask(&u1, t).unwrap(), 0.25).unwrap();
        assert!(superlevel_mask(&ur, t).unwrap().same_cells(&direct), "t = {t}");
    }
}

#[test]
fn support_functions_add() {
    let mut rng = common::rng(3);
    let u0 = common::random_quasiconcave(&mut rng, 6, 0.5, false);
    let u1 = common::random_quasiconcave(&mut rng, 6, 0.5, false);
    let rho = 0.5;
    let ur = minkowski_combination(&u0, &u1, rho).unwrap();
    let (h0, h1, hr) = (
        support_profile(&u0, 12, 15).unwrap(),
        support_profile(&u1, 12, 15).unwrap(),
        support_profile(&ur, 12, 15).unwrap(),
    );
    for k in 0..12 {
        for j in 0..15 {
            let want = (1.0 - rho) * h0.get(k, j) + rho * h1.get(k, j);
            let got = hr.get(k, j);
            if want.is_finite() {
                assert!((got - want).abs() <= 2.0 * u0.cell, "{k} {j}: {got} vs {want}");
            } else {
                assert_eq!(got, f64::NEG_INFINITY);
            }
        }
    }
}

#[test]
fn translated_talenti_pair_meets_halfway() {
    let cell = 0.05;
    let u0 = GridFunction::talenti(3.0, Point::new(-0.2, 0.0), 0.6, cell, 24).unwrap();
    let u1 = GridFunction::talenti(3.0, Point::new(0.2, 0.1), 0.6, cell, 24).unwrap();
    let mid = Point::new(0.0, 0.05);
    let ur = minkowski_combination(&u0, &u1, 0.5).unwrap();
    let expected = GridFunction::from_fn(ur.origin, ur.cell, ur.nx, ur.ny, |x| {
        (1.0 - (x.dist(mid) / 0.6).sqrt()).max(0.0)
    })
    .unwrap();
    let worst = ur.values().iter().zip(expected.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // ladder rung plus the Lipschitz modulus of the cusp over one cell
    assert!(worst <= 1.0 / 64.0 + (cell / 0.6).sqrt(), "{worst}");
    let rep = maximizer_affinity_check(&u0, &u1, 0.5, Point::new(-0.2, 0.0), Point::new(0.2, 0.1)).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn non_quasiconcave_input_is_rejected() {
    let two = GridFunction::centered(0.1, 8, |x| {
        let a = (0.5 - x.dist(Point::new(-0.5, 0.0))).max(0.0);
        let b = (0.5 - x.dist(Point::new(0.5, 0.0))).max(0.0);
        a.max(b)
    })
    .unwrap();
    let err = minkowski_combination(&two, &two, 0.5).unwrap_err();
    assert!(matches!(err, morrey_core::Error::NotQuasiconcave { .. }));
}

#[test]
fn polya_szego_on_random_fields() {
    let mut rng = common::rng(5);
    for k in 0..10 {
        let u = common::random_quasiconcave(&mut rng, 12, 1.0 / 12.0, true);
        let p = if k % 2 == 0 { 3.0 } else { 4.0 };
        for axis in [Axis::X1, Axis::X2] {
            let r = polya_szego_check(&u, p, axis).unwrap();
            assert!(r.passed, "{k} {axis:?}: {r:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rearrangement_invariants(seed in any::<u64>(), x1 in any::<bool>()) {
        let axis = if x1 { Axis::X1 } else { Axis::X2 };
        let mut rng = common::rng(seed);
        let u = common::random_quasiconcave(&mut rng, 5, 0.2, false);
        let s = steiner_rearrange(&u, axis);
        prop_assert_eq!(s.max(), u.max());
        prop_assert_eq!(&steiner_rearrange(&s, axis), &s);
        for j in 0..LADDER_LEVELS {
            let t = j as f64 / LADDER_LEVELS as f64;
            let a = superlevel_mask(&u, t).unwrap().line_counts(axis);
            let b = superlevel_mask(&s, t).unwrap().line_counts(axis);
            prop_assert_eq!(a, b);
        }
        // sorted values along each line are preserved
        let lines = |g: &GridFunction| -> Vec<Vec<u64>> {
            let (n, m) = if x1 { (g.nx, g.ny) } else { (g.ny, g.nx) };
            (0..n).map(|l| {
                let mut v: Vec<u64> = (0..m)
                    .map(|k| if x1 { g.get(l, k) } else { g.get(k, l) })
                    .filter(|&v| v > 0.0)
                    .map(f64::to_bits)
                    .collect();
                v.sort_unstable();
                v
            }).collect()
        };
        prop_assert_eq!(lines(&u), lines(&s));
    }

    #[test]
    fn support_profiles_are_monotone(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let u = common::random_quasiconcave(&mut rng, 5, 0.2, false);
        let prof = support_profile(&u, 8, 9).unwrap();
        prop_assert!(prof.max_increase() <= 0.0);
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let u = common::random_quasiconcave(&mut rng, 3, 0.3, false);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        prop_assert_eq!(GridFunction::read_csv(buf.as_slice()).unwrap(), u);
    }
}
