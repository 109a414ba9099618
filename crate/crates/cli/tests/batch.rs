use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use duojaw_cli::batch::{sha256_hex, trace_file_name, write_outputs, BatchOptions, RunReport, TRACE_HEADER};
use duojaw_cli::scenario::{load_scenario, Scenario};

fn scenarios() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(scenario: &Scenario, out: &Path, opts: &BatchOptions) -> RunReport {
    write_outputs(out, scenario, sha256_hex(b"test"), opts).unwrap()
}

#[test]
fn offset_sweep_success_never_rises_with_offset() {
    let s = load_scenario(&scenarios().join("offset_sweep.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(&s, dir.path(), &BatchOptions::default());
    assert_eq!(report.runs.len(), 40);
    let offsets: Vec<f64> = report
        .aggregates
        .points
        .iter()
        .map(|p| p.settings["noise.placement_offset_mm"].as_float().unwrap())
        .collect();
    assert_eq!(offsets, vec![0.0, 0.5, 1.0, 2.0]);
    let successes: Vec<usize> = report.aggregates.points.iter().map(|p| p.successes).collect();
    assert!(successes.windows(2).all(|w| w[1] <= w[0]), "{successes:?}");
    assert_eq!(successes[0], 10);
}

#[test]
fn aggregates_match_the_emitted_traces() {
    let s = load_scenario(&scenarios().join("spacer_tilt_sweep.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(&s, dir.path(), &BatchOptions::default());
    let mut rows = 0;
    let mut phases: BTreeMap<String, usize> = BTreeMap::new();
    for record in &report.runs {
        let path = dir.path().join("traces").join(trace_file_name(record.index));
        let mut reader = csv::Reader::from_path(&path).unwrap();
        assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER);
        let mut last_t = None;
        let mut n = 0;
        for row in reader.records() {
            let row = row.unwrap();
            last_t = Some(row[0].parse::<f64>().unwrap());
            *phases.entry(row[8].to_owned()).or_default() += 1;
            n += 1;
        }
        assert_eq!(n, record.trace_rows, "run {}", record.index);
        assert_eq!(last_t, record.trace_end_s, "run {}", record.index);
        rows += n;
    }
    assert_eq!(rows, report.aggregates.trace_rows);
    assert_eq!(phases, report.aggregates.phase_rows);
    let successes = report
        .runs
        .iter()
        .filter(|r| r.report.as_ref().unwrap().success)
        .count();
    assert_eq!(successes, report.aggregates.successes);
    let per_point: usize = report.aggregates.points.iter().map(|p| p.successes).sum();
    assert_eq!(per_point, successes);
    let b: usize = report.aggregates.stage_outcomes["b"].values().sum();
    assert_eq!(b, report.runs.len());
}

#[test]
fn run_count_is_points_times_repetitions() {
    let src = r#"
task = "one_hand"
seed = 9
repetitions = 3
[[sweep]]
path = "noise.placement_offset_mm"
values = [0.0, 0.3]
[[sweep]]
path = "search.detection_drop_mm"
values = [0.3, 0.4, 0.5]
"#;
    let s = Scenario::parse(src, "t").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(
        &s,
        dir.path(),
        &BatchOptions {
            trace: false,
            ..BatchOptions::default()
        },
    );
    assert_eq!(report.runs.len(), 18);
    assert_eq!(report.aggregates.points.len(), 6);
    assert!(!dir.path().join("traces").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["files"], serde_json::json!(["report.json", "timing.json"]));
}

#[test]
fn seed_override_shifts_every_run() {
    let s = load_scenario(&scenarios().join("onehand_pin.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = BatchOptions {
        seed: Some(1000),
        trace: false,
        ..BatchOptions::default()
    };
    let report = run(&s, dir.path(), &opts);
    assert_eq!(report.base_seed, 1000);
    assert!(report.runs.iter().enumerate().all(|(i, r)| r.seed == 1000 + i as u64));
}

#[test]
fn unwritable_output_leaves_a_partial_manifest() {
    let s = load_scenario(&scenarios().join("idle_nominal.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    // A file where the traces directory should go.
    fs::write(dir.path().join("traces"), "").unwrap();
    let err = write_outputs(dir.path(), &s, "h".into(), &BatchOptions::default()).unwrap_err();
    assert!(err.to_string().contains("traces"), "{err}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], false);
    assert_eq!(manifest["files"], serde_json::json!([]));
}
