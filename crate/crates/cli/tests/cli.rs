use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn wkam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wkam")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn pair_check_passes_and_writes_report() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("pair_check.json");
    let o = wkam(&["pair-check", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS control bracket at witness"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["verification"], "pair-check");
    assert_eq!(report["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reports_are_reproducible() {
    let cfg = config("theorem1.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    // A single small grid keeps this quick; the shipped config is the full ladder.
    let text = std::fs::read_to_string(&cfg).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["grids"] = serde_json::json!([{ "n_q": 32, "n_t": 4 }]);
    let small = write(dir.path(), "small.json", &doc.to_string());
    for out in [&a, &b] {
        let o = wkam(&["theorem1", "--config", small.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--seed", "11"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let ra = std::fs::read(a.path().join("report.json")).unwrap();
    let rb = std::fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["provenance"]["seed"], 11);
}

#[test]
fn failing_criterion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "noncommuting.json",
        r#"{ "models": { "primary": [
              { "family": "pendulum", "params": { "amplitude": 1.0 } },
              { "family": "forced_pendulum", "params": { "amplitude": 1.0, "epsilon": 0.5 } }] },
            "grids": [{ "n_q": 32, "n_t": 4 }],
            "verification": { "kind": "pair-check" } }"#,
    );
    let o = wkam(&["pair-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL bracket defect"));
}

#[test]
fn missing_grids_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{ "models": { "primary": [{ "family": "pendulum", "params": { "amplitude": 1.0 } }] },
            "verification": { "kind": "alpha" } }"#,
    );
    let o = wkam(&["alpha", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grids"));
}

#[test]
fn verb_needing_a_pair_rejects_one_model() {
    let cfg = config("weak_kam.json");
    let o = wkam(&["theorem1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("models.primary"));
}

#[test]
fn unknown_verb_is_a_usage_error() {
    let cfg = config("alpha.json");
    let o = wkam(&["theorem9", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_three_and_flags_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tight.json",
        r#"{ "models": { "primary": [{ "family": "forced_pendulum", "params": { "amplitude": 1.0, "epsilon": 0.5 } }] },
            "grids": [{ "n_q": 32, "n_t": 4 }],
            "verification": { "kind": "weak-kam", "fixed_point": { "tol": 1e-300, "max_iters": 80 } } }"#,
    );
    let out = dir.path().join("out");
    let o = wkam(&["weak-kam", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let marker: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(marker["partial"], true);
    assert_eq!(marker["status"], "aborted");
}

#[test]
fn zero_threads_is_rejected() {
    let cfg = config("pair_check.json");
    let o = wkam(&["pair-check", "--config", cfg.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_golden_config_parses() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).unwrap();
            wkam_core::experiments::Scenario::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}
