//! Black-box tests of the `lognnet` binary: exit codes, pinned outputs,
//! CSV schemas and the run manifest.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn lognnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lognnet"))
        .args(args)
        .env("LOGNNET_DATA_DIR", common::data_dir())
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn memory_prints_table_one_bytes() {
    let out = lognnet(&["memory", "--shape", "784:25:10", "--algorithm", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout_of(&out).trim(), "4180");

    let out = lognnet(&["memory", "--shape", "784:25:10", "--algorithm", "1"]);
    assert_eq!(stdout_of(&out).trim(), "1044");

    let out = lognnet(&["memory", "--shape", "784:100:60:10", "--algorithm", "2"]);
    assert_eq!(stdout_of(&out).trim(), "29820");
}

#[test]
fn memory_breakdown_is_csv() {
    let out = lognnet(&["memory", "--shape", "784:25:10", "--breakdown"]);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("array,elements,bytes"));
    assert!(text.contains("w1_row,785,3140"));
    assert!(text.contains("total,1045,4180"));
}

#[test]
fn help_exits_zero() {
    let out = lognnet(&["--help"]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("sweep-r"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = lognnet(&["memory", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_command_is_usage_error() {
    let out = lognnet(&["transmogrify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_r_is_domain_error() {
    let out = lognnet(&["train", "--r", "2.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(0, 2]"), "stderr: {err}");
}

#[test]
fn pattern_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p2.txt");
    let out = lognnet(&["pattern", "export", "--id", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let loaded = lognnet::tpattern::Pattern::load(&path).unwrap();
    assert_eq!(loaded, lognnet::tpattern::Pattern::builtin(2).unwrap());
    // the run wrote its manifest next to the output
    let manifest = dir.path().join("p2.txt.manifest.json");
    assert!(manifest.exists());
    let text = std::fs::read_to_string(manifest).unwrap();
    assert!(text.contains("\"command\": \"pattern\""));
}

#[test]
fn lyapunov_emits_csv_grid() {
    let out = lognnet(&[
        "lyapunov", "--r-from", "1.8", "--r-to", "2.0", "--step", "0.1", "--samples", "2000",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,lyapunov");
    assert_eq!(lines.len(), 4); // header + 1.8, 1.9, 2.0
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(fields.len(), 2);
        assert!(fields[0] >= 1.8 && fields[0] <= 2.0);
    }
}

#[test]
fn bifurcation_rejects_unbounded_r() {
    let out = lognnet(&["bifurcation", "--r-from", "1.0", "--r-to", "2.2", "--step", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_eval_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("tiny.bin");
    let csv_path = dir.path().join("history.csv");
    let out = lognnet(&[
        "train",
        "--shape", "784:6:10",
        "--epochs", "2",
        "--limit-train", "600",
        "--limit-test", "200",
        "--model-out", model_path.to_str().unwrap(),
        "--out", csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(model_path.exists());

    let history = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,test_accuracy");
    assert_eq!(lines.len(), 3);

    let manifest_path = dir.path().join("tiny.bin.manifest.json");
    assert!(manifest_path.exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["config"]["shape"], "784:6:10");
    assert_eq!(manifest["seed"], 42);
    assert!(manifest["finished_unix"].as_u64().unwrap() >= manifest["started_unix"].as_u64().unwrap());

    // the recorded final epoch accuracy matches a fresh evaluation
    let final_acc: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    let out = lognnet(&[
        "eval",
        "--model", model_path.to_str().unwrap(),
        "--limit-test", "200",
        "--algorithm", "1",
        "--threads", "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("accuracy"));
    let evaluated: f64 = lines.next().unwrap().parse().unwrap();
    assert_eq!(evaluated, final_acc);

    // text export runs and mentions the shape
    let out = lognnet(&["model", "export", "--model", model_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("shape 784:6:10"));
}

#[test]
fn sweep_r_csv_schema() {
    let out = lognnet(&[
        "sweep-r",
        "--r-list", "1.0,1.885",
        "--shape", "784:5:10",
        "--epochs", "1",
        "--limit-train", "400",
        "--limit-test", "100",
        "--threads", "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,accuracy,lyapunov");
    assert_eq!(lines.len(), 3);
    let row: Vec<f64> = lines[2].split(',').map(|t| t.parse().unwrap()).collect();
    assert_eq!(row[0], 1.885);
    assert!(row[1] >= 0.0 && row[1] <= 100.0);
}

#[test]
fn commands_do_not_mutate_input_data() {
    let dir = common::data_dir();
    let target = dir.join("t10k-labels-idx1-ubyte");
    let before = std::fs::metadata(&target).map(|m| m.len()).ok();
    let _ = lognnet(&["memory", "--shape", "784:25:10"]);
    let after = std::fs::metadata(&target).map(|m| m.len()).ok();
    assert_eq!(before, after);
    assert!(!Path::new("data.manifest.json").exists());
}
