use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ipm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run ipm")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(
        &cfg,
        r#"{"scenario":"circle4_d2","kernel":{"variant":"exact_rbf","sigma":1.0},
            "train":{"steps":200,"snapshot_every":50},"seed":3}"#,
    )
    .unwrap();
    ok(&ipm(
        &["simulate", "--config", cfg.to_str().unwrap()],
        dir.path(),
    ));
    for f in ["trace.json", "trace.csv", "trace.svg"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let trace = read(&dir.path().join("trace.json"));
    assert_eq!(
        trace["snapshot_steps"],
        serde_json::json!([0, 50, 100, 150, 200])
    );
}

#[test]
fn stability_default_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ipm(&["stability"], dir.path()));
    let v = read(&dir.path().join("stability.json"));
    assert_eq!(v["verdict"], "stable", "{v}");
}

#[test]
fn bad_min_reports_roots() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ipm(&["bad-min"], dir.path()));
    assert!(dir.path().join("bad_min.json").exists());
}

#[test]
fn diverge_writes_witness() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ipm(&["diverge"], dir.path()));
    let w = read(&dir.path().join("witness.json"));
    assert!(w["velocity"].as_f64().unwrap() > 0.0, "{w}");
    assert!(dir.path().join("escape.csv").exists());
}

#[test]
fn metrics_of_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    fs::write(&a, r#"{"points":[[0,0],[1,0],[0,3]]}"#).unwrap();
    let o = ipm(
        &["metrics", a.to_str().unwrap(), a.to_str().unwrap()],
        dir.path(),
    );
    ok(&o);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["mmd2"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["w2"].as_f64().unwrap(), 0.0);
    assert!((v["divergence_fraction"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn small_sweep_and_concat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"scenario":"circle4_d2","trials":2,
            "kernels":[{"variant":"exact_rbf","sigma":1.0},{"variant":"rff","sigma":0.5,"features":50,"seed":1}],
            "train":{"steps":100,"snapshot_every":50}}"#,
    )
    .unwrap();
    ok(&ipm(
        &["sweep", "--config", cfg.to_str().unwrap()],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");
    assert!(dir.path().join("summary.json").exists());

    let cc = dir.path().join("concat.json");
    fs::write(&cc, r#"{"features":20,"train":{"steps":50}}"#).unwrap();
    let out = dir.path().join("concat");
    ok(&ipm(&["concat", "--config", cc.to_str().unwrap()], &out));
    let v = read(&out.join("concat.json"));
    assert_eq!(v["curves"].as_array().unwrap().len(), 4);
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"kernel":{"variant":"exact_rbf","sigma":1.0},"stpes":5}"#,
    )
    .unwrap();
    let o = ipm(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
}
