//! Golden outputs for a small scenario. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test -p duojaw-cli --test golden`.

use std::fs;
use std::path::{Path, PathBuf};

use duojaw_cli::batch::{sha256_hex, write_outputs, BatchOptions};
use duojaw_cli::scenario::Scenario;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// report.json verbatim, and one `sha256  file` line per trace.
fn outputs(out: &Path) -> (String, String) {
    let text = fs::read_to_string(golden_dir().join("onehand_small.toml")).unwrap();
    let scenario = Scenario::parse(&text, "onehand_small.toml").unwrap();
    write_outputs(out, &scenario, sha256_hex(text.as_bytes()), &BatchOptions::default()).unwrap();
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    let mut names: Vec<_> = fs::read_dir(out.join("traces"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let sums = names
        .iter()
        .map(|n| format!("{}  {n}\n", sha256_hex(&fs::read(out.join("traces").join(n)).unwrap())))
        .collect();
    (report, sums)
}

#[test]
fn outputs_match_the_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let (report, sums) = outputs(dir.path());
    let report_path = golden_dir().join("onehand_small.report.json");
    let sums_path = golden_dir().join("onehand_small.traces.sha256");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&report_path, &report).unwrap();
        fs::write(&sums_path, &sums).unwrap();
    }
    assert_eq!(report, fs::read_to_string(&report_path).unwrap());
    assert_eq!(sums, fs::read_to_string(&sums_path).unwrap());
}
