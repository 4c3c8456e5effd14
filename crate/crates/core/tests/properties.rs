use proptest::prelude::*;

use viana_core::ensemble::{pairwise_sum, PairwiseSum};
use viana_core::maps::{make_f1, make_f2_default, singular_values, PhasePoint, DEFAULT_MISIUREWICZ_A};
use viana_core::orbit::Orbit;
use viana_core::stats::{fit_points, ks_statistic, phi_value};
use viana_core::ulam::{build_ulam_base, Axis, BaseSelector};

const A: f64 = DEFAULT_MISIUREWICZ_A;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_are_ordered_and_multiply_to_det(
        a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0,
    ) {
        let (hi, lo) = singular_values([[a, b], [c, d]]);
        prop_assert!(hi >= lo && lo >= 0.0);
        let det = (a * d - b * c).abs();
        prop_assert!((hi * lo - det).abs() <= 1e-9 * (1.0 + hi * hi));
        let frob = a * a + b * b + c * c + d * d;
        prop_assert!((hi * hi + lo * lo - frob).abs() <= 1e-9 * (1.0 + frob));
    }

    #[test]
    fn f1_trapping_holds_pointwise(u in 0.0f64..1.0, v in 0.0f64..=1.0, alpha in 0.001f64..0.02) {
        let s = make_f1(A, alpha, 2.0).unwrap();
        let (lo, hi) = s.fiber_interval();
        let p = PhasePoint::new(u, lo + (hi - lo) * v);
        prop_assert!(s.contains(s.apply(p)));
    }

    #[test]
    fn f2_trapping_holds_pointwise(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let s = make_f2_default(A, 2, A, 0.005).unwrap();
        let (t0, t1) = s.base_domain();
        let (lo, hi) = s.fiber_interval();
        let p = PhasePoint::new(t0 + (t1 - t0) * u, lo + (hi - lo) * v);
        prop_assert!(s.contains(s.apply(p)));
    }

    #[test]
    fn ulam_rows_are_stochastic(beta in 1.05f64..4.0, n in 16usize..400) {
        let op = build_ulam_base(BaseSelector::Beta { beta }, n).unwrap();
        prop_assert!(op.row_sum_error() < 1e-12);
    }

    #[test]
    fn axis_locate_brackets(lo in -3.0f64..0.0, width in 0.1f64..4.0, cells in 1usize..500, t in 0.0f64..=1.0) {
        let ax = Axis::new(lo, lo + width, cells);
        let x = lo + width * t;
        let i = ax.locate(x).unwrap();
        prop_assert!(ax.left(i) <= x);
        prop_assert!(x < ax.right(i) || i + 1 == cells);
    }

    #[test]
    fn pairwise_sum_matches_reference_on_integers(xs in prop::collection::vec(-1000i32..1000, 0..300)) {
        let fs: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        let exact: i64 = xs.iter().map(|&x| x as i64).sum();
        prop_assert_eq!(pairwise_sum(&fs), exact as f64);
        let mut acc = PairwiseSum::new();
        fs.iter().for_each(|&x| acc.push(x));
        prop_assert_eq!(acc.count(), fs.len() as u64);
    }

    #[test]
    fn time_tails_are_monotone(seed in any::<u64>()) {
        let s = make_f1(A, 0.01, 2.0).unwrap();
        let rng = viana_core::ensemble::member_rng(seed, 0);
        let t = Orbit::lebesgue(&s, rng).expansion_time(0.2, 2_000).unwrap();
        let flags: Vec<bool> = (0..=2_000).map(|n| t.exceeds(n)).collect();
        prop_assert!(flags[0]);
        prop_assert!(flags.windows(2).all(|w| w[0] || !w[1]));
    }

    #[test]
    fn phi_is_continuous_and_nonnegative(delta in 1e-4f64..0.49, d in 0.0f64..1.0) {
        prop_assert!(phi_value(d.max(1e-300), delta) >= 0.0);
        let below = phi_value(delta * (1.0 - 1e-12), delta);
        prop_assert!((below - phi_value(delta, delta)).abs() < 1e-8);
        prop_assert!(phi_value(2.0 * delta * (1.0 - 1e-12), delta).abs() < 1e-8);
    }

    #[test]
    fn fit_inverts_random_models(tau in 0.1f64..5.0, zeta in 0.1f64..1.0, c in 0.3f64..2.0) {
        let ns: Vec<f64> = (0..30)
            .map(|i| (0.3 * 40f64.powf(i as f64 / 29.0) / tau).powf(1.0 / zeta))
            .collect();
        let ps: Vec<f64> = ns.iter().map(|n| c * (-tau * n.powf(zeta)).exp()).collect();
        let (sn, sp): (Vec<f64>, Vec<f64>) =
            ns.iter().zip(&ps).filter(|(_, &p)| p > 1e-6 && p < 0.9).map(|(&n, &p)| (n, p)).unzip();
        let f = fit_points(&sn, &sp).unwrap();
        prop_assert!((f.tau_hat - tau).abs() < 1e-6 && (f.zeta_hat - zeta).abs() < 1e-6);
    }

    #[test]
    fn ks_is_a_distance(xs in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let d = ks_statistic(&xs, |x| 0.5 * (1.0 + (x / 2f64.sqrt()).tanh()));
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-12);
    }
}
