use proptest::prelude::*;
use solvdiff_core::mc::path_rng;
use solvdiff_core::specfun::{inv_reg_gamma_lower, reg_gamma_lower};
use solvdiff_core::transforms::{time_transform, time_transform_inverse};
use solvdiff_core::*;

fn discrete() -> impl Strategy<Value = DiscreteLogConcave> {
    prop_oneof![
        (0.01f64..2000.0).prop_map(|l| DiscreteLogConcave::poisson(l).unwrap()),
        (0.0f64..500.0, 0.01f64..500.0).prop_map(|(t, b)| DiscreteLogConcave::bessel(t, b).unwrap()),
        (0.01f64..200.0, 0.01f64..1000.0).prop_map(|(t, l)| DiscreteLogConcave::inc_gamma(t, l).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_sums_to_one(d in discrete()) {
        let m = d.mode();
        let mut total = d.pmf(m);
        let mut k = 1;
        loop {
            let right = d.pmf(m + k);
            let left = if k <= m { d.pmf(m - k) } else { 0.0 };
            total += right + left;
            if right + left < 1e-18 && k > 10 {
                break;
            }
            k += 1;
        }
        prop_assert!((total - 1.0).abs() < 1e-10, "{d:?}: {total}");
    }

    #[test]
    fn log_concave_and_mode(d in discrete()) {
        let m = d.mode();
        prop_assert!(d.pmf(m) >= d.pmf(m + 1));
        if m > 0 {
            prop_assert!(d.pmf(m) >= d.pmf(m - 1));
        }
        let mut prev = f64::INFINITY;
        for n in 0..(m + 50) {
            let r = d.ratio(n);
            prop_assert!(r <= prev * (1.0 + 1e-12), "{d:?} n={n}");
            prev = r;
        }
    }

    #[test]
    fn chopdown_is_deterministic_and_in_support(d in discrete(), u in 0.0f64..1.0) {
        let a = d.chopdown(u);
        prop_assert_eq!(a, d.chopdown(u));
        prop_assert!(d.pmf(a.value) > 0.0);
    }

    #[test]
    fn inverse_gamma_round_trip(a in 0.05f64..5000.0, p in 1e-10f64..0.999_999) {
        let x = inv_reg_gamma_lower(a, p).unwrap();
        let back = reg_gamma_lower(a, x).unwrap();
        prop_assert!((back - p).abs() <= 1e-9 * p.max(1e-3), "a={a} p={p} back={back}");
    }

    #[test]
    fn time_transform_round_trip(l1 in -2.0f64..5.0, t in 1e-6f64..3.0) {
        let back = time_transform_inverse(l1, time_transform(l1, t)).unwrap();
        prop_assert!((back - t).abs() <= 1e-14 * t);
    }

    #[test]
    fn cev_map_round_trip(beta in -3.0f64..-0.1, delta in 0.1f64..5000.0, f in 1e-3f64..1e6) {
        let p = CevParams::new(0.02, delta, beta).unwrap();
        let back = p.f_of_x(p.x_of_f(f));
        prop_assert!((back - f).abs() <= 1e-12 * f);
    }

    #[test]
    fn absorbed_paths_stay_at_zero(mu in -2.0f64..-0.05, seed in 0u64..1000, which in 0usize..3) {
        let scheme = [Scheme::SeqFht, Scheme::BridgeFht, Scheme::SeqAbs][which];
        let p = SqbParams::from_index(mu, 2.0, Boundary::Absorbing).unwrap();
        let grid = TimeGrid::uniform(2.0, 16).unwrap();
        let mut src = PseudoRandom::new(path_rng(seed, 0));
        let path = p.sample_path(&grid, scheme, 1.0, &mut src).unwrap();
        let mut dead = false;
        for &x in &path.values {
            prop_assert!(x >= 0.0);
            if dead {
                prop_assert_eq!(x, 0.0);
            }
            dead |= x == 0.0;
        }
    }

    #[test]
    fn payoffs_nonnegative(values in prop::collection::vec(0.0f64..300.0, 9), k in 1.0f64..200.0) {
        for p in Payoff::ALL {
            for w in [AveragingWindow::Monitoring, AveragingWindow::WithSpot] {
                let s = OptionSpec::new(p, k, 1.0, 8, 0.01).unwrap().with_averaging(w);
                prop_assert!(s.payoff_values(&values).unwrap() >= 0.0);
            }
        }
    }
}
