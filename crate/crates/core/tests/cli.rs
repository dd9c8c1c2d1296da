//! CLI contract tests: label-file workflows, the --json flag, and exit
//! codes for bad input.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sperner-fixpoint")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("sperner-fixpoint-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn sperner_reads_a_label_file() {
    let path = tmp("segment.labels");
    std::fs::write(
        &path,
        "# a 1-simplex at mesh 2\n2 0 : 0\n1 1 : 1\n0 2 : 1\n",
    )
    .unwrap();
    let out = run(&["sperner", "--labels", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["fully_labeled_count"], 1);
    assert_eq!(report["config"]["labels"]["kind"], "file");
    assert_eq!(report["config"]["labels"]["m"], 2);
}

#[test]
fn reverse_reads_a_label_file() {
    let path = tmp("segment-reverse.labels");
    std::fs::write(&path, "2 0 : 0\n1 1 : 1\n0 2 : 1\n").unwrap();
    let out = run(&["reverse", "--labels", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["agreement"], true);
    assert_eq!(report["result"]["cell"], 1);
}

#[test]
fn malformed_label_files_exit_1_with_line_numbers() {
    let path = tmp("broken.labels");
    std::fs::write(&path, "2 0 : 0\n1 1 : 9\n0 2 : 1\n").unwrap();
    let out = run(&["sperner", "--labels", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn nonconforming_label_files_list_violations() {
    // Corner (0, 2) must carry label 1, not 0.
    let path = tmp("nonconforming.labels");
    std::fs::write(&path, "2 0 : 0\n1 1 : 1\n0 2 : 0\n").unwrap();
    let out = run(&["sperner", "--labels", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("corner"), "stderr: {err}");
}

#[test]
fn json_flag_mirrors_stdout() {
    let json_path = tmp("solve.json");
    let out = run(&[
        "solve",
        "--fn",
        "rotation",
        "--n",
        "2",
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let file_bytes = std::fs::read(&json_path).unwrap();
    assert_eq!(out.stdout, file_bytes);
}
