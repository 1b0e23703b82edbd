use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[learner]
total_episodes = 300
checkpoint_every = 100

[teacher]
demonstrator = 1
source_episodes = 300

[harness]
strategies = ["random", "sagg_riac", "sgim_d"]
seeds = [0, 1]
n_probe = 20000
bench_resolution = 16
noise_policies = 5
noise_repeats = 5
calibration_samples = 2000
"#;

fn sgim(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sgim"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap();
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sgim(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn calibrate_reports_scale_and_writes_config() {
    let dir = workspace();
    let text = ok(dir.path(), &["calibrate", "--config", "cfg.toml", "--samples", "5000", "--write", "cal.toml"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let scale = v["scale"].as_f64().unwrap();
    assert!(scale > 0.3 && scale < 0.45, "{scale}");
    assert!((v["landing_radius_p99"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let cal = fs::read_to_string(dir.path().join("cal.toml")).unwrap();
    assert!(cal.contains("[env]") && cal.contains(&format!("scale = {scale}")));
}

#[test]
fn full_pipeline() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["bench-gen", "--config", "cfg.toml", "--out", "bench.json"]);
    let bench: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("bench.json")).unwrap()).unwrap();
    assert!(bench["points"].as_array().unwrap().len() >= 100);

    ok(d, &["teach-gen", "--demonstrator", "1", "--config", "cfg.toml", "--out", "d1.csv"]);
    let demos = fs::read_to_string(d.join("d1.csv")).unwrap();
    assert_eq!(demos.lines().count(), 1 + 127);

    for out in ["a", "b"] {
        ok(d, &["run", "--strategy", "sgim_d", "--seed", "3", "--config", "cfg.toml", "--teacher", "d1.csv", "--out", out]);
    }
    let a = fs::read(d.join("a/run_sgim_d_3.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b/run_sgim_d_3.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 301);
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("a/run_sgim_d_3.json")).unwrap()).unwrap();
    assert_eq!(side["counters"]["executed"], 300);

    let text = ok(d, &["eval", "--config", "cfg.toml", "--bench", "bench.json", "--memory", "a/run_sgim_d_3_memory.csv"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["episodes"], 300);
    assert!(v["mean_error"].as_f64().unwrap() > 0.0);

    ok(d, &["eval", "--config", "cfg.toml", "--bench", "bench.json", "--teacher", "d1.csv", "--label", "small", "--out", "rep"]);
    let curves = fs::read_to_string(d.join("rep/small_curves.csv")).unwrap();
    assert_eq!(curves.lines().next().unwrap(), "strategy,episodes,mean,variance,runs");
    assert_eq!(curves.lines().count(), 1 + 3 * 3);

    let table = ok(d, &["compare", "--report", "rep/small_report.json", "--json", "verdicts.json"]);
    assert!(table.lines().any(|l| l.starts_with("C3 ")), "{table}");
    assert!(table.lines().all(|l| l.contains("PASS") || l.contains("FAIL")));
    let verdicts: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("verdicts.json")).unwrap()).unwrap();
    assert!(!verdicts.as_array().unwrap().is_empty());
    // Two seeds cannot satisfy the ranking criterion.
    let strict = sgim(d, &["compare", "--report", "rep/small_report.json", "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = workspace();
    let d = dir.path();
    assert!(!sgim(d, &["teach-gen", "--demonstrator", "4", "--out", "x"]).status.success());
    assert!(!sgim(d, &["run", "--strategy", "nope", "--seed", "1"]).status.success());
    fs::write(d.join("bad.toml"), "[learner]\ntotal_episodes = 0\n").unwrap();
    let out = sgim(d, &["run", "--strategy", "random", "--seed", "1", "--config", "bad.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("total_episodes"));
    assert!(!sgim(d, &["compare", "--report", "missing.json"]).status.success());
}
