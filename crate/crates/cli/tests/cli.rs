use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn duojaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duojaw")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .display()
        .to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn run_writes_report_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = duojaw(&[
        "run",
        &scenario("clamping_nominal.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(
        text(&o.stdout).starts_with("5 runs: 5 succeeded"),
        "{}",
        text(&o.stdout)
    );
    assert!(out.join("traces/run_0004.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let source = fs::read(scenario("clamping_nominal.toml")).unwrap();
    assert_eq!(report["scenario_sha256"], duojaw_cli::batch::sha256_hex(&source));
    assert_eq!(report["aggregates"]["successes"], 5);
}

#[test]
fn seed_and_trace_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = duojaw(&[
        "run",
        &scenario("idle_nominal.toml"),
        "--seed",
        "77",
        "--trace",
        "off",
        "--sequential",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(!out.join("traces").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["base_seed"], 77);
    assert_eq!(report["runs"][4]["seed"], 81);
}

#[test]
fn failed_tasks_still_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = duojaw(&[
        "run",
        &scenario("onehand_clamping.toml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("0 succeeded, 20 failed"));
}

#[test]
fn sweep_requires_axes() {
    let dir = tempfile::tempdir().unwrap();
    let o = duojaw(&[
        "sweep",
        &scenario("idle_nominal.toml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("no [[sweep]] axes"));
    let o = duojaw(&[
        "sweep",
        &scenario("spacer_tilt_sweep.toml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("world.tilt_increment_deg=0.5"));
}

#[test]
fn validate_reports_line_numbers() {
    let o = duojaw(&["validate", &scenario("spacer_tilt_sweep.toml")]);
    assert!(o.status.success());
    assert!(text(&o.stdout).contains("ok, 8 runs"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "task = \"idle_pulley\"\nseed = 1\n[noise]\nplacement_ofset_mm = 1.0\n",
    )
    .unwrap();
    let o = duojaw(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("bad.toml:4:"), "{err}");
    assert!(err.contains("placement_ofset_mm"), "{err}");
}

#[test]
fn catalog_lists_builtin_parts() {
    let o = duojaw(&["catalog"]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    for id in ["retainer_pin", "idle_pulley", "clamping_pulley", "base_slot"] {
        assert!(out.contains(id), "{id}");
    }
    let o = duojaw(&["catalog", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["entries"]["retainer_pin"]["part"]["shank_diameter_mm"], 6.0);
}
