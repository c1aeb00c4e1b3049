use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn harmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmap")).args(args).output().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_names_builtins() {
    let out = harmap(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "geodesic-1d"));
}

#[test]
fn run_writes_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = harmap(&["run", "--builtin", "geodesic-1d", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let energy = summary["measured"]["energy"].as_f64().unwrap();
    assert!((energy - (std::f64::consts::PI / 6.0).powi(2)).abs() < 1e-4);
    for f in ["field_plus.csv", "field_minus.csv", "descent.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let out = harmap(&["run", "--builtin", "square-flow", "--out", path(d.path()), "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = harmap(&["run", "--builtin", "constant", "--seed", "42", "--out", path(dir.path())]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["seed"], 42);
}

#[test]
fn manifest_config_reruns_exactly() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(harmap(&["run", "--builtin", "constant", "--out", path(a.path())]).status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    let config: toml::Value = serde_json::from_value(manifest["config"].clone()).unwrap();
    let file = b.path().join("echo.toml");
    fs::write(&file, toml::to_string(&config).unwrap()).unwrap();
    let out_dir = b.path().join("out");
    assert!(harmap(&["run", "--config", path(&file), "--out", path(&out_dir)]).status.success());
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(out_dir.join("manifest.json")).unwrap()
    );
}

#[test]
fn config_errors_exit_nonzero_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(&file, "name = \"x\"\nkind = \"minimize\"\n[grid]\ndim = 2\nh = -1.0\n").unwrap();
    let out = harmap(&["validate", "--config", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert_eq!(err["path"], "targets");
}

#[test]
fn missing_file_is_io_error() {
    let out = harmap(&["validate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn validate_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/constant.toml"))
        .unwrap()
        .replace("minus = [1.0, 0.0, 0.0]", "minus = [0.0, 1.0, 0.0]");
    fs::write(&file, text).unwrap();
    let out = harmap(&["validate", "--config", path(&file)]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let violations = report["compatibility"]["violations"].as_array().unwrap();
    assert!(!violations.is_empty());
    assert!(violations[0]["node"].is_u64() && violations[0]["magnitude"].as_f64().unwrap() > 1.0);
    assert_eq!(stderr_json(&out)["error"], "incompatible");

    let ok = harmap(&["validate", "--builtin", "constant"]);
    assert!(ok.status.success());
}

#[test]
fn flow_validation_warns_without_failing() {
    let out = harmap(&["validate", "--builtin", "square-flow"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("flux")));
}

#[test]
fn diagnose_after_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(harmap(&["run", "--builtin", "constant", "--out", path(dir.path())]).status.success());
    let out = harmap(&["diagnose", "--builtin", "constant", "--out", path(dir.path())]);
    assert!(out.status.success());
    assert!(dir.path().join("diagnostics/summary.json").exists());
    let empty = tempfile::tempdir().unwrap();
    let out = harmap(&["diagnose", "--builtin", "constant", "--out", path(empty.path())]);
    assert_eq!(out.status.code(), Some(1));
}
