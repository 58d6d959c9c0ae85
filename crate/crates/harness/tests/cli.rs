//! End-to-end runs of the `bslp` binary: flag handling, config-file
//! precedence, artifacts, and exit codes.

use std::fs;
use std::process::Command;

fn bslp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bslp"))
}

#[test]
fn lambda_sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bslp()
        .args([
            "lambda-sweep",
            "--N", "64",
            "--n", "32",
            "--k", "8",
            "--trials", "2",
            "--sweep", "1e-4,1e-3",
            "--seed", "5",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sweep_value"), "{stdout}");
    assert!(stdout.contains("wrote"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("lambda-sweep.csv")).unwrap();
    assert!(csv.starts_with("# bslp-csv-v1\n# experiment=lambda-sweep"));
    assert_eq!(csv.lines().count(), 2 + 1 + 4); // comments + header + 2x2 rows
}

#[test]
fn config_file_applies_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    fs::write(&cfg_path, "trials=2\nk=8\nN=64\nn=32\nseed=9\nsweep=1e-4\n").unwrap();
    let out = bslp()
        .args(["lambda-sweep", "--config"])
        .arg(&cfg_path)
        .args(["--trials", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("lambda-sweep.csv")).unwrap();
    // flag overrode trials=2 -> 3 rows; file set the rest
    assert_eq!(csv.lines().filter(|l| l.starts_with("lambda-sweep")).count(), 3);
    assert!(csv.contains("trials=3"));
    assert!(csv.contains("seed=9"));
}

#[test]
fn config_errors_exit_one() {
    let out = bslp()
        .args(["lambda-sweep", "--N", "100", "--d", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("divisible"), "{stderr}");

    let out = bslp().arg("no-such-experiment").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn theory_report_prints_json_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = bslp()
        .args(["theory-report", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"delta_method\": \"exact\""), "{stdout}");
    assert!(stdout.contains("CERTIFIED") || stdout.contains("INCONCLUSIVE"), "{stdout}");
    assert!(dir.path().join("theory-report.json").exists());
}
