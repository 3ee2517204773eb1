use hgo_mfc::controller::ControllerConfig;
use hgo_mfc::linalg::is_hurwitz;
use hgo_mfc::plant::{PlantState, ReferencePlant};
use hgo_mfc::sim::{
    compute_metrics, default_stability_predicate, run_closed_loop, sweep, tune_parameter, ControlMode, EstimatorKind,
    SeedPolicy, SimConfig, StabilityCriteria, SweepOptions, SweepParam, TuneParam,
};
use hgo_mfc::{Error, SimConfig32, SimConfig64};

fn stabilization(plant: ReferencePlant<f64>, duration: f64) -> SimConfig<f64> {
    let l = if matches!(plant, ReferencePlant::SyntheticNormalForm) {
        1
    } else {
        0
    };
    let mut cfg = SimConfig64::paper_defaults(plant, 0.0, duration);
    cfg.initial_state = PlantState::new(vec![0.0; l], [0.5, 0.0]);
    cfg.controller.ki = 0.0;
    cfg
}

#[test]
fn paper_defaults_bounded_on_nonlinear_catalog_plants() {
    for plant in [ReferencePlant::synthetic(), ReferencePlant::twin_rotor()] {
        let name = plant.name();
        let trace = run_closed_loop(&SimConfig64::paper_defaults(plant, 0.3, 40.0)).unwrap();
        assert!(!trace.diverged(), "{name}");
        let settle = trace.records.len() / 2;
        for r in &trace.records[settle..] {
            let norms = [r.x1, r.x2, r.w, r.e_u, r.xhat[0], r.xhat[1], r.xhat[2]];
            assert!(norms.iter().all(|v| v.abs() < 1.0), "{name} at t = {}: {norms:?}", r.t);
        }
        assert!((trace.last().unwrap().x1 - 0.3).abs() < 1e-3, "{name}");
    }

    let trace = run_closed_loop(&stabilization(ReferencePlant::synthetic(), 20.0)).unwrap();
    let last = trace.last().unwrap();
    assert!(last.x1.hypot(last.x2) < 1e-2 && last.w.abs() < 1e-2);
}

#[test]
fn double_integrator_stability_follows_input_lag_model() {
    // u(k+1) = u(k) + γ (v - b u) acts as a first-order lag with
    // τ = T / (γ b); the outer loop is then τ s³ + s² + k2 s + k1.
    let growth = |b: f64| {
        let mut cfg = SimConfig64::paper_defaults(ReferencePlant::LtiTest { a: 0.0, b }, 0.3, 60.0);
        cfg.saturation = vec![None; 3];
        let c = &cfg.controller;
        let tau = cfg.sampling_time / (c.gamma * b);
        let hurwitz = is_hurwitz(&[1.0 / tau, c.k2 / tau, c.k1 / tau]);
        let trace = run_closed_loop(&cfg).unwrap();
        let err = |r: &&hgo_mfc::sim::TraceRecord<f64>| (r.x1 - 0.3).abs();
        let n = trace.records.len();
        let early = trace.records[n / 3..n / 2].iter().map(|r| err(&r)).fold(0.0, f64::max);
        let late = trace.records[5 * n / 6..].iter().map(|r| err(&r)).fold(0.0, f64::max);
        (hurwitz, late / early)
    };
    let (stable_b2, ratio_b2) = growth(2.0);
    let (stable_b1, ratio_b1) = growth(1.0);
    assert!(stable_b2 && ratio_b2 < 0.5, "b = 2: {ratio_b2}");
    assert!(!stable_b1 && ratio_b1 > 1.0, "b = 1: {ratio_b1}");
}

#[test]
fn input_changes_only_at_sample_boundaries() {
    let mut cfg = SimConfig64::paper_defaults(ReferencePlant::twin_rotor(), 0.3, 1.0);
    cfg.log_stride = 1;
    let trace = run_closed_loop(&cfg).unwrap();
    // u(k+1) = u(k) + γ e_u(k): the held input is a function of the previous sample only.
    for w in trace.records.windows(2) {
        let want = w[0].u + cfg.controller.gamma * w[0].e_u;
        assert!((w[1].u - want).abs() <= 1e-15 * (1.0 + want.abs()));
    }
}

#[test]
fn estimators_share_the_loop() {
    let mut cfg = SimConfig64::paper_defaults(ReferencePlant::twin_rotor(), 0.3, 30.0);
    cfg.saturation = vec![None; 3];
    let hgo = compute_metrics(&run_closed_loop(&cfg).unwrap(), 0.3).unwrap();
    cfg.estimator = EstimatorKind::DataDriven { n_samples: 26 };
    let trace = run_closed_loop(&cfg).unwrap();
    let dd = compute_metrics(&trace, 0.3).unwrap();
    assert!(!hgo.diverged && !dd.diverged);
    assert!(hgo.steady_state_err < 1e-2 && dd.steady_state_err < 1e-2);
    assert_eq!((hgo.ops_per_step, dd.ops_per_step), (15, 78));

    // Warm-up: nothing estimated and u held until the window is full.
    for r in &trace.records[..25] {
        assert!(!r.estimator_ready);
        assert_eq!((r.xhat, r.u, r.est_ops), ([0.0; 3], 0.0, 0));
    }
    assert!(trace.records[25].estimator_ready);
}

#[test]
fn ideal_linearizing_mode_tracks_exactly() {
    let mut cfg = SimConfig64::paper_defaults(ReferencePlant::synthetic(), 0.3, 15.0);
    cfg.estimator = EstimatorKind::TrueState;
    cfg.saturation = vec![None; 3];
    cfg.control_mode = ControlMode::IdealFeedbackLinearizing;
    let trace = run_closed_loop(&cfg).unwrap();
    let m = compute_metrics(&trace, 0.3).unwrap();
    // k1 = 2, k2 = 4: poles -2 ± √2, overdamped.
    assert!(m.overshoot_pct < 1.0, "{}", m.overshoot_pct);
    assert!(m.steady_state_err < 1e-3);
    assert!(trace.records.iter().all(|r| r.e_u.abs() < 1e-9));
}

#[test]
fn runaway_gamma_is_reported_not_raised() {
    let mut cfg = stabilization(ReferencePlant::LtiTest { a: 0.0, b: 2.0 }, 5.0);
    cfg.controller.gamma = 1.5;
    let trace = run_closed_loop(&cfg).unwrap();
    assert!(trace.diverged());
    let m = compute_metrics(&trace, 0.0).unwrap();
    assert!(m.diverged && m.final_time_s < 5.0);
}

#[test]
fn f32_loop_runs() {
    let mut cfg = SimConfig32::paper_defaults(ReferencePlant::twin_rotor(), 0.3, 30.0);
    cfg.controller = ControllerConfig::paper_defaults();
    let trace = run_closed_loop(&cfg).unwrap();
    let m = compute_metrics(&trace, 0.3).unwrap();
    assert!(!m.diverged && m.steady_state_err < 1e-2, "{m:?}");
}

#[test]
fn alpha_above_one_rejected_in_closed_loop() {
    let mut cfg = SimConfig64::paper_defaults(ReferencePlant::twin_rotor(), 0.3, 1.0);
    cfg.sampling_time = 0.1;
    assert!(matches!(run_closed_loop(&cfg), Err(Error::Config(_))));
}

#[test]
fn sweep_rows_follow_value_order_for_any_thread_count() {
    let mut cfg = SimConfig64::paper_defaults(ReferencePlant::twin_rotor(), 0.3, 3.0);
    cfg.noise.enabled = true;
    cfg.noise.seed = 5;
    let values = [0.05, 0.5, 0.1, 0.2];
    let one = sweep(
        &cfg,
        SweepParam::Epsilon,
        &values,
        &SweepOptions {
            threads: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    let many = sweep(
        &cfg,
        SweepParam::Epsilon,
        &values,
        &SweepOptions {
            threads: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(one, many);
    assert_eq!(one.iter().map(|r| r.value).collect::<Vec<_>>(), values);
    let seeds: std::collections::HashSet<u64> = one.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), values.len());

    let shared = sweep(
        &cfg,
        SweepParam::Epsilon,
        &values[..2],
        &SweepOptions {
            seed_policy: SeedPolicy::Shared,
            threads: None,
        },
    )
    .unwrap();
    assert!(shared.iter().all(|r| r.seed == 5));
}

#[test]
fn sweep_rejects_mismatched_parameter() {
    let cfg = SimConfig64::paper_defaults(ReferencePlant::twin_rotor(), 0.3, 1.0);
    let err = sweep(&cfg, SweepParam::DdSamples, &[9.0], &SweepOptions::default());
    assert!(matches!(err, Err(Error::Config(_))));
    assert!("bogus".parse::<SweepParam>().is_err());
}

#[test]
fn tune_gamma_on_lti_rejects_then_accepts() {
    let mut cfg = stabilization(ReferencePlant::LtiTest { a: 0.0, b: 2.0 }, 10.0);
    cfg.saturation = vec![None; 3];
    let out = tune_parameter(
        &cfg,
        TuneParam::Gamma,
        1.0,
        8,
        default_stability_predicate(StabilityCriteria::default()),
    )
    .unwrap();
    let accepted = out.value().unwrap();
    assert!(accepted < 0.5, "accepted {accepted}");
    assert!(out.audit.len() >= 2);
    assert!(!out.audit[0].accepted);
    assert!(out.audit.last().unwrap().accepted);
    assert_eq!(out.audit.iter().filter(|a| a.accepted).count(), 1);
}

#[test]
fn tune_epsilon_on_synthetic_yields_bounded_loop() {
    let cfg = stabilization(ReferencePlant::synthetic(), 20.0);
    let out = tune_parameter(
        &cfg,
        TuneParam::Epsilon,
        5.0,
        8,
        default_stability_predicate(StabilityCriteria::default()),
    )
    .unwrap();
    let eps = out.value().unwrap();
    let accepted = SweepParam::Epsilon.apply(&cfg, eps).unwrap();
    let trace = run_closed_loop(&accepted).unwrap();
    assert!(!trace.diverged());
    assert!(trace.records.iter().all(|r| r.x1.abs() < 10.0 && r.x2.abs() < 10.0));
}

#[test]
fn tune_always_true_returns_start_and_exhaustion_keeps_audit() {
    let cfg = stabilization(ReferencePlant::synthetic(), 1.0);
    let out = tune_parameter(&cfg, TuneParam::Gamma, 3e-4, 8, |_, _| true).unwrap();
    assert_eq!(out.value().unwrap(), 3e-4);
    assert_eq!(out.audit.len(), 1);

    let out = tune_parameter(&cfg, TuneParam::Gamma, 3e-4, 2, |_, _| false).unwrap();
    assert_eq!(out.audit.len(), 3);
    assert!(matches!(out.value(), Err(Error::NoStableValue { attempts: 3 })));
}
