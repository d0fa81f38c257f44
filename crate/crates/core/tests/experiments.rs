use wkam_core::experiments::{
    exit_code_for, probe_coefficients, run_scenario, Report, Scenario, Tolerances, Verb,
};
use wkam_core::grid::TorusGrid;
use wkam_core::WkamError;

const PENDULUM: &str = r#"{ "family": "pendulum", "params": { "amplitude": 1.0 } }"#;

fn doc(kind: &str, grids: &str, extra: &str) -> String {
    format!(
        r#"{{ "models": {{ "primary": [{PENDULUM}, {PENDULUM}] }}, "grids": {grids},
             "verification": {{ "kind": "{kind}" {extra} }} }}"#
    )
}

fn config_path(e: WkamError) -> String {
    match e {
        WkamError::ConfigInvalid { path, .. } => path,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn missing_and_unknown_keys_are_named() {
    let e = Scenario::from_json(r#"{ "models": { "primary": [] }, "verification": { "kind": "alpha" } }"#).unwrap_err();
    assert_eq!(exit_code_for(&e), 2);
    assert_eq!(config_path(e), "grids");
    let e = Scenario::from_json(&doc("alpha", r#"[{ "n_q": 16, "n_t": 4 }]"#, r#", "windw": 3"#)).unwrap_err();
    assert_eq!(config_path(e), "windw");
}

#[test]
fn grids_must_increase() {
    let e = Scenario::from_json(&doc("alpha", r#"[{ "n_q": 32, "n_t": 4 }, { "n_q": 16, "n_t": 8 }]"#, "")).unwrap_err();
    assert_eq!(config_path(e), "grids[1]");
    let e = Scenario::from_json(&doc("alpha", r#"[{ "n_q": 32, "n_t": 4 }, { "n_q": 32, "n_t": 4 }]"#, "")).unwrap_err();
    assert_eq!(config_path(e), "grids[1]");
    assert!(Scenario::from_json(&doc("alpha", r#"[{ "n_q": 32, "n_t": 4 }, { "n_q": 64, "n_t": 4 }]"#, "")).is_ok());
}

#[test]
fn times_and_models_are_checked() {
    let grids = r#"[{ "n_q": 16, "n_t": 4 }]"#;
    let e = Scenario::from_json(&doc("theorem1", grids, r#", "times": [0.0, 1.0, 0.5, 2.0]"#)).unwrap_err();
    assert_eq!(config_path(e), "verification.times");
    let one = r#"{ "models": { "primary": [{ "family": "pendulum", "params": { "amplitude": 1.0 } }] },
                   "grids": [{ "n_q": 16, "n_t": 4 }], "verification": { "kind": "theorem2" } }"#;
    assert_eq!(config_path(Scenario::from_json(one).unwrap_err()), "models.primary");
    let bad = doc("alpha", grids, "").replacen(r#""amplitude": 1.0"#, r#""epsilon": 1.0"#, 1);
    assert_eq!(config_path(Scenario::from_json(&bad).unwrap_err()), "models.primary[0].params.amplitude");
}

#[test]
fn times_off_the_grid_are_rejected_at_run_time() {
    let s = Scenario::from_json(&doc("theorem1", r#"[{ "n_q": 16, "n_t": 4 }]"#, r#", "times": [0.0, 0.3, 0.7, 1.0]"#)).unwrap();
    let e = run_scenario(&s, None, None, 1).unwrap_err();
    assert_eq!(config_path(e), "verification.times");
}

#[test]
fn verb_override_and_names_round_trip() {
    for v in Verb::ALL {
        assert_eq!(Verb::parse(v.name()), Some(v));
    }
    let s = Scenario::from_json_as(&doc("alpha", r#"[{ "n_q": 16, "n_t": 4 }]"#, ""), Some(Verb::Theorem1)).unwrap();
    assert_eq!(s.verification.kind, Verb::Theorem1);
}

#[test]
fn probes_are_seeded() {
    assert_eq!(probe_coefficients(4, 3), probe_coefficients(4, 3));
    assert_ne!(probe_coefficients(4, 3), probe_coefficients(5, 3));
    assert!(probe_coefficients(9, 20).iter().flatten().all(|(a, b)| a.abs() <= 1.0 && b.abs() <= 1.0));
}

#[test]
fn hash_tracks_content() {
    let a = Scenario::from_json(&doc("alpha", r#"[{ "n_q": 16, "n_t": 4 }]"#, "")).unwrap();
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn ratio_rule_uses_floor() {
    let s = Scenario::from_json(&doc("alpha", r#"[{ "n_q": 16, "n_t": 4 }]"#, "")).unwrap();
    let grids = [TorusGrid::new(16, 4).unwrap(), TorusGrid::new(32, 4).unwrap(), TorusGrid::new(64, 4).unwrap()];
    let tol = Tolerances::default();

    let mut r = Report::new(&s, 0, 1);
    r.converges("x", &[1e-3, 4e-4, 1e-4], &grids, &tol);
    assert!(r.passed);
    assert_eq!(r.ratios["x"], vec![Some(2.5), Some(4.0)]);

    let mut r = Report::new(&s, 0, 1);
    r.converges("x", &[1e-3, 9e-4, 1e-4], &grids, &tol);
    assert!(!r.passed);
    assert_eq!(r.exit_code(), 1);

    let mut r = Report::new(&s, 0, 1);
    r.converges("x", &[1e-16, 3e-16, 0.0], &grids, &tol);
    assert!(r.passed);
    assert_eq!(r.ratios["x"][1], None);
}

#[test]
fn alpha_run_reports_every_grid() {
    let s = Scenario::from_json(
        &doc("alpha", r#"[{ "n_q": 16, "n_t": 4 }, { "n_q": 32, "n_t": 8 }]"#, r#", "expected_alpha": [1.0, 1.0]"#),
    )
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let report = run_scenario(&s, Some(out.path()), Some(3), 1).unwrap();
    assert!(report.passed, "{:?}", report.summary_lines());
    assert_eq!(report.provenance.seed, 3);
    assert!((report.metric(1, "alpha_karp[0]").unwrap() - 1.0).abs() < 1e-12);
    assert!(out.path().join("report.json").exists());
    let csv = std::fs::read_to_string(out.path().join("alpha.csv")).unwrap();
    assert!(csv.starts_with("model,n_q,n_t,karp,growth"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn custom_model_block_parses() {
    let text = r#"{ "models": { "primary": [{ "family": "custom",
        "params": { "profile": [0.0, 0.0, 0.5, 0.0, 0.1] },
        "fourier": { "potential": [{ "m": 1, "n": 0, "cc": 0.5 }],
                     "generating": [{ "m": 1, "n": 1, "sc": 0.02 }],
                     "forcing": [{ "k": 1, "cos": 0.3 }] } }] },
        "grids": [{ "n_q": 16, "n_t": 4 }], "verification": { "kind": "alpha" } }"#;
    let s = Scenario::from_json(text).unwrap();
    let model = s.models.primary[0].build().unwrap();
    let v = model.value(0.0, 0.0, 0.0);
    assert!(v.is_finite());
    let bad = text.replace("[0.0, 0.0, 0.5, 0.0, 0.1]", "[0.0, 0.0, -0.5]");
    assert_eq!(exit_code_for(&Scenario::from_json(&bad).unwrap_err()), 2);
}
