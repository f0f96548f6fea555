//! End-to-end behavior of the `analyze` binary: exit codes, output
//! plumbing, determinism, and schema conformance of emitted reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_analyze"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is valid JSON")
}

// ───────────────────────── exit-code contract ─────────────────────────

#[test]
fn missing_profile_file_is_a_usage_error() {
    let out = run(&["scan", "--config", "/nonexistent/profile.toml"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
}

#[test]
fn unknown_profile_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    std::fs::write(&path, "bogus = 1\n\n[map]\nkind = \"fold\"\nk = 2\n").unwrap();
    let out = run(&["scan", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("bogus"), "diagnostic names the field: {}", stderr_of(&out));
}

#[test]
fn coarse_grids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    std::fs::write(&path, "[map]\nkind = \"fold\"\nk = 2\n\n[scan]\ngrid_res = 8\n").unwrap();
    let out = run(&["scan", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("grid_res"), "stderr: {}", stderr_of(&out));
}

#[test]
fn scan_needs_a_torus_model() {
    let out = run(&["scan", "--config", preset("example-ex.toml").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
}

#[test]
fn csv_is_reserved_for_curve_commands() {
    let out = run(&[
        "scan",
        "--config",
        preset("fold2.toml").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("csv"));
}

#[test]
fn two_formats_need_an_output_directory() {
    let out = run(&[
        "splitting",
        "--config",
        preset("example-ex.toml").to_str().unwrap(),
        "--format",
        "json,csv",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("--out"));
}

#[test]
fn zero_threads_is_rejected() {
    let out = run(&[
        "splitting",
        "--config",
        preset("example-ex.toml").to_str().unwrap(),
        "--threads",
        "0",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_env_must_be_a_positive_integer() {
    for bad in ["0", "many"] {
        let out = bin()
            .args(["splitting", "--config", preset("example-ex.toml").to_str().unwrap()])
            .env("ANALYZE_THREADS", bad)
            .output()
            .unwrap();
        assert_eq!(code(&out), 2, "ANALYZE_THREADS={bad} must be rejected");
    }
}

#[test]
fn thread_flag_overrides_a_broken_env() {
    let out = bin()
        .args([
            "splitting",
            "--config",
            preset("example-ex.toml").to_str().unwrap(),
            "--threads",
            "2",
        ])
        .env("ANALYZE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
}

#[test]
fn demanded_certificate_failure_exits_3_but_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    std::fs::write(
        &path,
        "[map]\n\
         kind = \"linear\"\n\
         matrix = [[2.0, -2.0], [2.0, 0.0]]\n\n\
         [orbit]\n\
         start = [0.1, 0.2]\n\
         len_fwd = 96\n\n\
         [splitting]\n\
         source = \"axes\"\n\
         kappa = 1\n\
         ell = 64\n\
         n_max = 24\n\
         require = true\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "splitting",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["splitting"]["passes"], serde_json::json!(false));
    assert_eq!(report["splitting"]["domination_time"], serde_json::Value::Null);
}

// ───────────────────────── output plumbing ─────────────────────────

#[test]
fn output_directory_receives_report_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("artifacts");
    let out = run(&[
        "splitting",
        "--config",
        preset("example-ex.toml").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "json,csv",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let log = stderr_of(&out);
    assert!(log.contains("report.json") && log.contains("curves.csv"), "log: {log}");
    assert!(log.contains("elapsed_ms="), "wall time goes to stderr, not the report");

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let rows = report["splitting"]["rows"].as_array().unwrap();

    let csv = std::fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,sigma_k_log,sigma_k1_log,ratio,cauchy_dist");
    assert_eq!(lines.len(), 1 + rows.len(), "one CSV line per report row plus the header");

    // Rows start at the first window showing a gap and run to n_max.
    let n0 = rows[0]["n"].as_u64().unwrap();
    let n_last = rows[rows.len() - 1]["n"].as_u64().unwrap();
    assert_eq!(rows.len() as u64, n_last - n0 + 1);
    for (line, row) in lines[1..].iter().zip(rows) {
        let n: u64 = line.split(',').next().unwrap().parse().unwrap();
        assert_eq!(n, row["n"].as_u64().unwrap());
    }
}

#[test]
fn seed_flag_is_echoed_in_the_report() {
    let out = run(&[
        "splitting",
        "--config",
        preset("example-ex.toml").to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["seed"], serde_json::json!(7));
}

#[test]
fn reruns_are_byte_identical() {
    let profile = preset("example-ex.toml");
    let args = ["splitting", "--config", profile.to_str().unwrap(), "--seed", "9"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn linear_models_scan_to_an_empty_critical_set() {
    let out = run(&["scan", "--config", preset("diag23.toml").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report = json_of(&out);
    assert_eq!(report["scan"]["critical_points_found"], serde_json::json!(false));
    assert_eq!(report["scan"]["kappa"], serde_json::json!(0));
}

// ───────────────────────── schema conformance ─────────────────────────

#[test]
fn every_command_validates_against_the_shipped_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/report.v1.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");

    let runs: [(&str, &str); 5] = [
        ("scan", "fold2.toml"),
        ("splitting", "example-ex.toml"),
        ("splitting", "fold2.toml"),
        ("conecheck", "diag23.toml"),
        ("perturb", "fold2.toml"),
    ];
    for (command, profile) in runs {
        let out = run(&[command, "--config", preset(profile).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{command} {profile}: {}", stderr_of(&out));
        let report = json_of(&out);
        let errors: Vec<String> =
            validator.iter_errors(&report).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{command} {profile} violates the schema: {errors:#?}");
    }
}
