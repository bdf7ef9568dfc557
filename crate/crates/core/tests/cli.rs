//! End-to-end checks of the installed binary: output shapes, exit codes,
//! and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn contcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contcount"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_inputs(dir: &Path, name: &str, values: &[f64]) -> String {
    let path = dir.join(name);
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn stream_zero_noise_gives_prefix_sums() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_inputs(dir.path(), "ones.txt", &[1.0; 4]);
    let out = contcount(&["stream", "--n", "4", "--sigma", "0", "--input", &input]);
    assert!(out.status.success());
    let body = stdout(&out);
    let values: Vec<&str> = body
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .collect();
    assert_eq!(values.len(), 4);
    for (i, line) in values.iter().enumerate() {
        let (t, est) = line.split_once(',').unwrap();
        assert_eq!(t, (i + 1).to_string());
        assert_eq!(est.parse::<f64>().unwrap(), (i + 1) as f64);
    }
}

#[test]
fn stream_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_inputs(dir.path(), "vals.txt", &[3.0, -1.0, 2.0, 0.5, 4.0]);
    let args = [
        "stream", "--n", "8", "--zeta", "0.5", "--sigma", "1.5", "--seed", "77", "--input",
        &input, "--truth",
    ];
    let a = contcount(&args);
    let b = contcount(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same argv + seed must be byte-identical");

    let c = contcount(&[
        "stream", "--n", "8", "--zeta", "0.5", "--sigma", "1.5", "--seed", "78", "--input",
        &input, "--truth",
    ]);
    assert_ne!(a.stdout, c.stdout, "different seed must change the noise");
}

#[test]
fn stream_modes_agree_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_inputs(dir.path(), "vals.txt", &[1.0; 16]);
    let run = |mode: &str| {
        let out = contcount(&[
            "stream", "--n", "16", "--sigma", "2", "--seed", "9", "--input", &input,
            "--noise-mode", mode,
        ]);
        assert!(out.status.success());
        stdout(&out)
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
            .map(|l| l.split_once(',').unwrap().1.parse::<f64>().unwrap())
            .collect::<Vec<f64>>()
    };
    let reference = run("reference");
    let streaming = run("streaming");
    for (a, b) in reference.iter().zip(&streaming) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn factor_reports_norm_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("l.csv");
    let out = contcount(&["factor", "--n", "2", "--dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let body = stdout(&out);
    let data = body.lines().nth(1).unwrap();
    let fields: Vec<&str> = data.split(',').collect();
    assert_eq!(fields[0], "2");
    let max_row_sq: f64 = fields[1].parse().unwrap();
    assert!((max_row_sq - 1.2071067811865475).abs() < 1e-9);
    assert_eq!(fields[4], "true");

    let dumped = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(dumped.lines().count(), 2); // L is 2 x 4
    assert_eq!(dumped.lines().next().unwrap().split(',').count(), 4);
}

#[test]
fn verify_subcommand_emits_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let out = contcount(&[
        "verify", "--n-grid", "2,4,8", "--lemma", "L7", "--out", report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&report).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "lemma_id,n,passed,worst_margin,witness");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("L7,") && r.contains(",true,")));
}

#[test]
fn verify_full_suite_small_grid() {
    let out = contcount(&["verify", "--n-grid", "2,4,8"]);
    assert!(out.status.success());
    let body = stdout(&out);
    assert_eq!(body.lines().count(), 1 + 13 * 3);
    assert!(!body.contains(",false,"));
}

#[test]
fn sweep_emits_table() {
    let out = contcount(&["sweep", "--n-list", "1,4,16", "--zeta", "0.5"]);
    assert!(out.status.success());
    let body = stdout(&out);
    assert_eq!(
        body.lines().next().unwrap(),
        "n,mean_se,max_se,binned_mean_se,binned_max_se,segments,step_time_ns"
    );
    assert_eq!(body.lines().count(), 4);
    let last = body.lines().last().unwrap();
    assert!(last.starts_with("16,"));
    assert_eq!(last.split(',').count(), 7);
}

#[test]
fn validation_failures_exit_one() {
    // Unknown flag.
    let out = contcount(&["factor", "--bogus", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8(out.stderr.clone()).unwrap().is_empty());

    // Library precondition violation (zeta out of range).
    let dir = tempfile::tempdir().unwrap();
    let input = write_inputs(dir.path(), "x.txt", &[1.0]);
    let out = contcount(&["stream", "--n", "4", "--zeta", "2.0", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("zeta"), "message names the offending flag: {err}");

    // Missing input file.
    let out = contcount(&["stream", "--n", "4", "--input", "/nonexistent/path.txt"]);
    assert_eq!(out.status.code(), Some(1));

    // n = 0.
    let out = contcount(&["factor", "--n", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = contcount(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let body = stdout(&out);
    for sub in ["verify", "factor", "bin", "stream", "sweep"] {
        assert!(body.contains(sub));
    }
}
