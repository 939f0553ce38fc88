//! End-to-end checks of the binary: exit codes, artifact layout, and the
//! tamper-detection path of `verify`.

use std::path::Path;
use std::process::Command;

fn quench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quench"))
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(
        &path,
        "[domain]\npoints = [32]\n\n[model]\nim_a = 1.0\nm = 1.0\n\n[run]\ndt = 1e-2\nt_end = 0.3\n",
    )
    .unwrap();
    path
}

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let status = quench()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("ledger.csv").exists());
    assert!(out.join("report.json").exists());
}

#[test]
fn verify_detects_tampered_ledger_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    assert!(quench()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());

    // inflate one mid-run mass entry: breaks both the recorded residual and
    // monotonicity
    let ledger = out.join("ledger.csv");
    let text = std::fs::read_to_string(&ledger).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let cols: Vec<String> = lines[15].split(',').map(String::from).collect();
    let mass: f64 = cols[1].parse().unwrap();
    let mut bumped = cols;
    bumped[1] = format!("{}", mass * 4.0);
    lines[15] = bumped.join(",");
    std::fs::write(&ledger, lines.join("\n") + "\n").unwrap();

    let output = quench().args(["verify", "--out"]).arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "stdout: {}", String::from_utf8_lossy(&output.stdout));
}

#[test]
fn malformed_config_exits_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[model]\nim_a = 1.0\nm = \"half\"\n").unwrap();
    let output = quench()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn inadmissible_coefficient_exits_one_before_stepping() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inadmissible.toml");
    std::fs::write(&path, "[model]\nre_a = 10.0\nim_a = 0.1\nm = 0.5\n").unwrap();
    let output = quench()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("inadmissible"), "stderr: {stderr}");
    assert!(!dir.path().join("out").join("ledger.csv").exists());
}

#[test]
fn presets_subcommand_lists_all_seven() {
    let output = quench().arg("presets").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    for name in [
        "mass-law-m1",
        "extinction-sandwich-1d",
        "extinction-sandwich-2d",
        "critical-source",
        "longtime-vanishing",
        "odi-regimes",
        "gn-estimate",
    ] {
        assert!(stdout.contains(name), "missing {name} in:\n{stdout}");
    }
}

#[test]
fn odi_table_emits_envelope_csv() {
    let output = quench()
        .args(["odi-table", "--alpha", "1", "--delta", "0.5", "--y0", "1", "--t0", "0", "--t-end", "3", "--samples", "4"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("# extinction_time = 1"), "stdout: {stdout}");
    assert!(stdout.contains("delta,t,envelope"), "stdout: {stdout}");
}

#[test]
fn sweep_with_empty_grid_is_a_noop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep");
    let status = quench()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "model.im_a", "--values", "", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}
