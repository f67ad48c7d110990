use manhattan_core::exact_engine::{enumerate_paths, exact_distribution, exact_mean, exact_msd, Limits};
use manhattan_core::formulas::{
    diffusive_limit, increment_mean, mean_coefficient, msd, parity_prob_even, MomentSeries,
};
use manhattan_core::lattice::{Dimension, OrientationRule, Site, Step};
use manhattan_core::ExactRational;
use proptest::prelude::*;

fn dim(d: usize) -> Dimension {
    Dimension::new(d).unwrap()
}

fn site_strategy() -> impl Strategy<Value = Vec<i64>> {
    (2usize..=7).prop_flat_map(|d| prop::collection::vec(-1_000_000i64..1_000_000, d))
}

proptest! {
    #[test]
    fn out_and_in_neighbours_partition(coords in site_strategy(), seed in any::<u64>(), iid in any::<bool>()) {
        let d = dim(coords.len());
        let rule = if iid { OrientationRule::iid_coin(d, seed) } else { OrientationRule::manhattan(d) };
        let x = Site::new(coords);
        let mut out = 0;
        let mut inn = 0;
        for axis in 0..d.get() {
            for sign in [1i8, -1] {
                let y = x.offset(Step::new(axis, sign)).unwrap();
                let fwd = rule.is_directed_edge(&x, &y).unwrap();
                let back = rule.is_directed_edge(&y, &x).unwrap();
                prop_assert!(fwd != back, "exactly one orientation per neighbour");
                out += fwd as usize;
                inn += back as usize;
            }
        }
        prop_assert_eq!(out, d.get());
        prop_assert_eq!(inn, d.get());
        let steps = rule.out_steps(&x).unwrap();
        prop_assert_eq!(steps.len(), d.get());
        for s in steps {
            prop_assert!(rule.is_directed_edge(&x, &x.offset(s).unwrap()).unwrap());
        }
    }

    #[test]
    fn lines_are_constant(coords in site_strategy(), k in -1000i64..1000, axis_pick in any::<usize>(), seed in any::<u64>()) {
        let d = dim(coords.len());
        let axis = axis_pick % d.get();
        let x = Site::new(coords.clone());
        let mut moved = coords;
        moved[axis] += k;
        let y = Site::new(moved);
        for rule in [OrientationRule::manhattan(d), OrientationRule::iid_coin(d, seed)] {
            prop_assert_eq!(rule.sign(&x, axis).unwrap(), rule.sign(&y, axis).unwrap());
        }
    }

    #[test]
    fn manhattan_parity_identity(coords in site_strategy()) {
        let d = dim(coords.len());
        let env = OrientationRule::manhattan(d).local_env(&Site::new(coords.clone())).unwrap();
        let total: i64 = coords.iter().sum();
        for (i, &c) in coords.iter().enumerate() {
            let expected = if (total - c).rem_euclid(2) == 0 { 1 } else { -1 };
            prop_assert_eq!(env.sign(i), expected);
        }
        let product = env.product();
        if d.get() % 2 == 1 {
            prop_assert_eq!(product, 1);
        } else {
            prop_assert_eq!(product, if total.rem_euclid(2) == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn mean_telescopes_over_increments(d in 2usize..=10, n in 0u64..60) {
        let d = dim(d);
        let sum: ExactRational = (0..n).map(|j| increment_mean(d, j)).sum();
        prop_assert_eq!(mean_coefficient(d, n), sum);
    }

    #[test]
    fn increment_links_to_parity(d in 2usize..=10, n in 0u64..60) {
        let d = dim(d);
        let two = ExactRational::from(2);
        let expected = (two * parity_prob_even(d, n) - ExactRational::one())
            / ExactRational::from(d.get() as i64);
        prop_assert_eq!(increment_mean(d, n), expected);
    }

    #[test]
    fn mean_never_vanishes_after_start(d in 2usize..=12, n in 1u64..200) {
        prop_assert!(!mean_coefficient(dim(d), n).is_zero());
    }

    #[test]
    fn msd_within_diffusive_band(d in 2usize..=10, n in 0u64..400) {
        let d = dim(d);
        let dev = (msd(d, n) - diffusive_limit(d) * ExactRational::from(n as i64)).abs();
        let bound = ExactRational::new(d.get() as i64, (d.get() as i64 - 1).pow(2)).unwrap();
        prop_assert!(dev <= bound);
    }
}

#[test]
fn d2_closed_form() {
    assert_eq!(msd(dim(2), 0), ExactRational::zero());
    for n in 1..=500i64 {
        assert_eq!(msd(dim(2), n as u64), ExactRational::from(2 * n - 1));
    }
}

#[test]
fn census_matches_parity_product() {
    // odd d: product of signs is always +1, so only half the sign vectors appear
    for d in [3usize, 5] {
        let census = OrientationRule::manhattan(dim(d)).env_census(2).unwrap();
        assert!(census.iter().all(|e| e.product() == 1));
    }
    for d in [2usize, 4] {
        let census = OrientationRule::manhattan(dim(d)).env_census(2).unwrap();
        assert!(census.iter().any(|e| e.product() == 1));
        assert!(census.iter().any(|e| e.product() == -1));
    }
}

#[test]
fn enumeration_agrees_with_dp_for_both_rules() {
    let l = Limits::default();
    for d in 2..=5usize {
        let dd = dim(d);
        let mut n = 0u64;
        while (d as u64).pow(n as u32) <= 100_000 {
            for rule in [OrientationRule::manhattan(dd), OrientationRule::iid_coin(dd, 7 + d as u64)] {
                let dp = exact_distribution(dd, n, &rule, &l).unwrap();
                let en = enumerate_paths(dd, n, &rule, &l).unwrap();
                assert_eq!(dp, en, "d={d} n={n} rule={}", rule.label());
                assert!(dp.check_invariants());
            }
            n += 1;
        }
    }
}

#[test]
fn theorem_agreement_small_grid() {
    for (d, n_max) in [(2usize, 30u64), (3, 14), (4, 9), (7, 5)] {
        let dd = dim(d);
        let rule = OrientationRule::manhattan(dd);
        let mut dist = manhattan_core::PathDistribution::initial(&rule);
        for n in 0..=n_max {
            if n > 0 {
                dist = manhattan_core::exact_engine::evolve(&dist, &rule).unwrap();
            }
            assert_eq!(exact_msd(&dist), msd(dd, n), "d={d} n={n}");
            assert_eq!(exact_mean(&dist), vec![mean_coefficient(dd, n); d], "d={d} n={n}");
        }
    }
}

#[test]
fn recurrence_series_matches_dp() {
    let dd = dim(3);
    let series = MomentSeries::from_recurrence(dd, 12);
    let dist = exact_distribution(dd, 12, &OrientationRule::manhattan(dd), &Limits::default()).unwrap();
    assert_eq!(series.get(12).unwrap(), &exact_msd(&dist));
}
