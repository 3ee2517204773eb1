use hgo_mfc::controller::integrator_step;
use hgo_mfc::dd_estimator::{DdConfig, SampleWindow};
use hgo_mfc::observer::{saturate_estimates, HgoConfig, HgoDiscrete};
use hgo_mfc::plant::{PlantState, ReferencePlant};
use hgo_mfc::sim::{run_closed_loop, SimConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observer_is_linear_in_the_measurement(
        ys in prop::collection::vec(-5.0f64..5.0, 1..60),
        zs in prop::collection::vec(-5.0f64..5.0, 60),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        eps in 0.01f64..1.0,
    ) {
        let cfg = HgoConfig::with_default_gains(eps, 0.2 * eps);
        let (mut o1, mut o2, mut o3) = (
            HgoDiscrete::new(&cfg).unwrap(),
            HgoDiscrete::new(&cfg).unwrap(),
            HgoDiscrete::new(&cfg).unwrap(),
        );
        for (y, z) in ys.iter().zip(&zs) {
            let e1 = o1.step(*y).unwrap();
            let e2 = o2.step(*z).unwrap();
            let e3 = o3.step(a * y + b * z).unwrap();
            for i in 0..3 {
                let want = a * e1[i] + b * e2[i];
                prop_assert!((e3[i] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn anti_windup_keeps_sigma_bounded(
        steps in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..200),
        bound in 0.01f64..5.0,
        t_s in 1e-4f64..0.5,
    ) {
        let mut sigma = 0.0;
        for (r, x1) in steps {
            sigma = integrator_step(sigma, r, x1, t_s, Some(bound));
            prop_assert!(sigma.abs() <= bound);
        }
    }

    #[test]
    fn dd_is_exact_on_quadratics(
        c0 in -10.0f64..10.0,
        c1 in -10.0f64..10.0,
        c2 in -10.0f64..10.0,
        n in 3usize..30,
        t_s in 1e-3f64..5e-2,
    ) {
        let mut win = SampleWindow::new(&DdConfig { n_samples: n, sampling_time: t_s }).unwrap();
        for k in 0..n + 3 {
            let t = k as f64 * t_s;
            if let Some(est) = win.push_and_estimate(c0 + c1 * t + c2 * t * t).unwrap() {
                let truth = [c0 + c1 * t + c2 * t * t, c1 + 2.0 * c2 * t, 2.0 * c2];
                for i in 0..3 {
                    prop_assert!((est[i] - truth[i]).abs() <= 1e-7 * (1.0 + truth[i].abs()),
                        "component {}: {} vs {}", i, est[i], truth[i]);
                }
            }
        }
    }

    #[test]
    fn saturation_respects_bounds(x in prop::collection::vec(-1e3f64..1e3, 3), b in 0.0f64..2.0) {
        let s = saturate_estimates(&x, &[None, Some(b), Some(b)]);
        prop_assert_eq!(s[0], x[0]);
        prop_assert!(s[1].abs() <= b && s[2].abs() <= b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn same_seed_gives_identical_traces(seed in any::<u64>(), variance in 0.0f64..1e-2) {
        let mut cfg = SimConfig::paper_defaults(ReferencePlant::synthetic(), 0.2, 0.5);
        cfg.initial_state = PlantState::new(vec![0.1], [0.0, 0.0]);
        cfg.noise.enabled = true;
        cfg.noise.seed = seed;
        cfg.noise.variance = variance;
        let a = run_closed_loop(&cfg).unwrap();
        let b = run_closed_loop(&cfg).unwrap();
        prop_assert_eq!(a.to_csv_string(), b.to_csv_string());
        prop_assert_eq!(a.records, b.records);
    }
}
