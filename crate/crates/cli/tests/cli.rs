//! End-to-end tests of the cylab binary: exit codes, deterministic
//! artifacts, and the report aggregator.

use std::path::Path;
use std::process::{Command, Output};

fn cylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn verify_is_deterministic_for_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let run = cylab(&["verify", "orbifold", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&run), 0, "stderr: {}", String::from_utf8_lossy(&run.stderr));
    }
    let ra = std::fs::read(a.join("report-orbifold.json")).unwrap();
    let rb = std::fs::read(b.join("report-orbifold.json")).unwrap();
    assert!(!ra.is_empty());
    assert_eq!(ra, rb, "same seed must give byte-identical reports");
}

#[test]
fn verify_all_seed_seven_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let run = cylab(&["verify", "all", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&run), 0, "stderr: {}", String::from_utf8_lossy(&run.stderr));
    }
    let ra = std::fs::read(a.join("report-all.json")).unwrap();
    let rb = std::fs::read(b.join("report-all.json")).unwrap();
    assert_eq!(ra, rb, "verify all --seed 7 must be byte-reproducible");
}

#[test]
fn verify_report_parses_and_carries_schema() {
    let dir = tempfile::tempdir().unwrap();
    let run = cylab(&["verify", "slag-flat", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(dir.path().join("report-slag-flat.json")).unwrap();
    assert!(text.ends_with('\n'));
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["suite"], "slag-flat");
    assert_eq!(json["seed"], 7);
    assert_eq!(json["passed"], true);
    assert!(json["ambient_note"].as_str().unwrap().contains("glued"));
    assert!(json["checks"].as_array().unwrap().len() >= 3);
    // Wall time must not leak into the artifact.
    assert!(!text.contains("wall"));
}

#[test]
fn stdout_lists_every_check_once() {
    let dir = tempfile::tempdir().unwrap();
    let run = cylab(&["verify", "metrics", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report-metrics.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    for check in json["checks"].as_array().unwrap() {
        let name = check["name"].as_str().unwrap();
        assert_eq!(stdout.matches(name).count(), 1, "{name} missing from stdout");
    }
    assert!(stdout.contains("0 failed"));
    // Timing goes to stderr, not stdout.
    assert!(!stdout.contains("wall time"));
    assert!(String::from_utf8(run.stderr).unwrap().contains("wall time"));
}

#[test]
fn unknown_names_are_usage_errors() {
    assert_eq!(code(&cylab(&["verify", "nonsense"])), 2);
    assert_eq!(code(&cylab(&["scan", "nonsense"])), 2);
    assert_eq!(code(&cylab(&["frobnicate"])), 2);
    assert_eq!(code(&cylab(&[])), 2);
    assert_eq!(code(&cylab(&["verify"])), 2);
}

#[test]
fn config_problems_exit_three() {
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("nope.toml");
    let run = cylab(&["verify", "metrics", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&run), 3);

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "[neck\nr0 = 0.5\n").unwrap();
    let run = cylab(&["verify", "metrics", "--config", broken.to_str().unwrap()]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("config"));

    let invalid = dir.path().join("invalid.toml");
    std::fs::write(&invalid, "[neck]\nr0 = -1.0\n").unwrap();
    let run = cylab(&["verify", "metrics", "--config", invalid.to_str().unwrap()]);
    assert_eq!(code(&run), 3);

    let run = cylab(&["verify", "metrics", "--tol-scale", "0"]);
    assert_eq!(code(&run), 3);
}

#[test]
fn scan_torus_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = cylab(&["scan", "torus", "--out", out]);
    assert_eq!(code(&run), 0, "stderr: {}", String::from_utf8_lossy(&run.stderr));

    let csv = std::fs::read_to_string(dir.path().join("scan-torus.csv")).unwrap();
    // 5^3 grid points plus the header line.
    assert_eq!(csv.lines().count(), 126);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan-torus.json")).unwrap())
            .unwrap();
    assert_eq!(summary["family"], "torus");
    assert_eq!(summary["rows"], 125);

    // Second run into a fresh directory is byte-identical.
    let dir2 = tempfile::tempdir().unwrap();
    let run2 = cylab(&["scan", "torus", "--out", dir2.path().to_str().unwrap()]);
    assert_eq!(code(&run2), 0);
    let csv2 = std::fs::read_to_string(dir2.path().join("scan-torus.csv")).unwrap();
    assert_eq!(csv, csv2);
}

#[test]
fn report_aggregates_and_propagates_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&cylab(&["verify", "orbifold", "--out", out])), 0);

    let run = cylab(&["report", out]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("orbifold"));
    assert!(stdout.contains("pass"));

    // Drop in a failing report; the aggregate must flip to exit 1.
    let fake = r#"{"suite":"fake","passed":false,"checks":[{"name":"fake/broken","status":"fail"}]}"#;
    std::fs::write(dir.path().join("report-fake.json"), fake).unwrap();
    let run = cylab(&["report", out]);
    assert_eq!(code(&run), 1);
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("fake/broken"));
}

#[test]
fn report_on_empty_or_missing_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cylab(&["report", dir.path().to_str().unwrap()])), 1);
    let gone = dir.path().join("missing");
    assert_eq!(code(&cylab(&["report", gone.to_str().unwrap()])), 1);
}

#[test]
fn tol_scale_loosens_thresholds_in_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = cylab(&["verify", "slag-flat", "--tol-scale", "100", "--out", out]);
    assert_eq!(code(&run), 0);
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(out).join("report-slag-flat.json")).unwrap(),
    )
    .unwrap();
    // The artifact records the requested scale and the unscaled thresholds.
    assert_eq!(json["tol_scale"], 100.0);
}
