use adl_core::experiments::*;

fn config() -> ExperimentConfig {
    serde_json::from_str(
        r#"{
            "name": "small",
            "d": 3,
            "protocol": {"kind": "uniform"},
            "times": [6, 6],
            "trials": 3000,
            "seed": 17,
            "estimators": [
                {"method": "uniform_mle_cases", "targets": [{"formula": "even_even_mle_exact"}, {"oracle": true}]},
                {"method": "two_obs_path", "targets": [{"formula": "detection_lower_bound"}]},
                {"method": "generic_mle"}
            ]
        }"#,
    )
    .unwrap()
}

fn body(mut r: ExperimentReport) -> String {
    r.wall_time_secs = 0.0;
    serde_json::to_string(&r).unwrap()
}

#[test]
fn report_does_not_depend_on_thread_count() {
    let cfg = config();
    let one = body(run_experiment(&cfg, Some(1)).unwrap());
    let four = body(run_experiment(&cfg, Some(4)).unwrap());
    assert_eq!(one, four);
}

#[test]
fn small_run_passes_its_targets() {
    let r = run_experiment(&config(), None).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_csv());
    assert_eq!(r.estimators[2].verdict, Verdict::Informational);
    let exact = &r.estimators[0].targets;
    assert!((exact[0].target.value - exact[1].target.value).abs() < 1e-12);
    let [lo, hi] = r.estimators[0].ci95;
    assert!(lo <= r.estimators[0].frequency && r.estimators[0].frequency <= hi);
    assert_eq!(r.to_csv().lines().count(), 1 + 2 + 1 + 1);
}

#[test]
fn wrong_target_fails() {
    let mut cfg = config();
    cfg.estimators[0].targets = vec![TargetSpec::Fixed {
        kind: adl_core::closed_form::TargetKind::Exact,
        value: 0.05,
        label: None,
    }];
    assert_eq!(run_experiment(&cfg, None).unwrap().verdict, Verdict::Fail);
}

#[test]
fn config_round_trips() {
    let cfg = config();
    let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}
