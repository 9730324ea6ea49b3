//! End-to-end checks of the `eegcn` binary: artifact layout, exit codes,
//! evaluation round trips, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eegcn"))
}

fn train_args(out: &Path) -> Vec<String> {
    [
        "train",
        "--train",
        fixture("train.jsonl").to_str().unwrap(),
        "--test",
        fixture("test.jsonl").to_str().unwrap(),
        "--parses-train",
        fixture("train.conllu").to_str().unwrap(),
        "--parses-test",
        fixture("test.conllu").to_str().unwrap(),
        "--glove",
        fixture("glove.txt").to_str().unwrap(),
        "--config",
        fixture("demo.config").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run(args: &[String]) -> Output {
    bin().args(args).output().expect("spawn eegcn")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

#[test]
fn train_writes_all_four_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = train_args(&out);
    args.extend(["--epochs".to_string(), "3".to_string()]);
    let output = run(&args);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    for artifact in ["manifest.json", "checkpoint.json", "epochs.csv", "report.json"] {
        assert!(out.join(artifact).exists(), "{artifact} missing");
    }
    let csv = std::fs::read_to_string(out.join("epochs.csv")).unwrap();
    assert!(csv.starts_with("epoch,train_loss,test_acc,test_macro_f1\n"));
    assert_eq!(csv.lines().count(), 4);
    // nothing outside the four artifacts lands in --out
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .collect();
    names.sort();
    assert_eq!(names, ["checkpoint.json", "epochs.csv", "manifest.json", "report.json"]);
}

#[test]
fn missing_required_flag_exits_two_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = train_args(&dir.path().join("run"));
    // drop --glove and its value
    let pos = args.iter().position(|a| a == "--glove").unwrap();
    args.drain(pos..pos + 2);
    let output = run(&args);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr_of(&output);
    assert!(err.to_lowercase().contains("usage"), "stderr: {err}");
}

#[test]
fn corrupt_parse_file_exits_three_and_names_the_block() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conllu");
    let mut text = std::fs::read_to_string(fixture("train.conllu")).unwrap();
    text = text.replacen("2\tfound", "2\tfound-too-few-columns", 1).replace(
        "2\tfound-too-few-columns\t_\t_\t_\t_\t0\troot\t_\t_",
        "2\tfound\tbroken",
    );
    std::fs::write(&bad, text).unwrap();
    let mut args = train_args(&dir.path().join("run"));
    let pos = args.iter().position(|a| a == "--parses-train").unwrap();
    args[pos + 1] = bad.to_str().unwrap().to_string();
    let output = run(&args);
    assert_eq!(output.status.code(), Some(3));
    let err = stderr_of(&output);
    assert!(err.contains("block 1"), "stderr: {err}");
}

#[test]
fn eval_reproduces_the_training_report_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = train_args(&out);
    args.extend(["--epochs".to_string(), "4".to_string()]);
    assert!(run(&args).status.success());

    let eval_args: Vec<String> = [
        "eval",
        "--checkpoint",
        out.join("checkpoint.json").to_str().unwrap(),
        "--test",
        fixture("test.jsonl").to_str().unwrap(),
        "--parses-test",
        fixture("test.conllu").to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let first = run(&eval_args);
    assert!(first.status.success(), "stderr: {}", stderr_of(&first));
    let report_file = std::fs::read_to_string(out.join("report.json")).unwrap();
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert_eq!(stdout.trim_end(), report_file.trim_end());

    // second invocation is byte-identical
    let second = run(&eval_args);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), stdout);
}

#[test]
fn eval_of_an_empty_examples_file_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = train_args(&out);
    args.extend(["--epochs".to_string(), "1".to_string()]);
    assert!(run(&args).status.success());

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let output = run(&[
        "eval".to_string(),
        "--checkpoint".to_string(),
        out.join("checkpoint.json").to_str().unwrap().to_string(),
        "--test".to_string(),
        empty.to_str().unwrap().to_string(),
        "--parses-test".to_string(),
        fixture("test.conllu").to_str().unwrap().to_string(),
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn incompatible_checkpoint_version_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = train_args(&out);
    args.extend(["--epochs".to_string(), "1".to_string()]);
    assert!(run(&args).status.success());

    let ckpt = out.join("checkpoint.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&ckpt).unwrap()).unwrap();
    value["version"] = serde_json::Value::from(42);
    std::fs::write(&ckpt, serde_json::to_string(&value).unwrap()).unwrap();

    let output = run(&[
        "eval".to_string(),
        "--checkpoint".to_string(),
        ckpt.to_str().unwrap().to_string(),
        "--test".to_string(),
        fixture("test.jsonl").to_str().unwrap().to_string(),
        "--parses-test".to_string(),
        fixture("test.conllu").to_str().unwrap().to_string(),
    ]);
    assert_eq!(output.status.code(), Some(5), "stderr: {}", stderr_of(&output));
}

#[test]
fn sweep_emits_the_pinned_header_and_one_row_per_layer_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let mut args = train_args(&out);
    args[0] = "sweep".to_string();
    args.extend([
        "--epochs".to_string(),
        "2".to_string(),
        "--layers".to_string(),
        "1,2,3".to_string(),
    ]);
    let output = run(&args);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "layers,acc,macro_f1");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,") && lines[3].starts_with("3,"));
}

#[test]
fn duplicate_layer_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = train_args(&dir.path().join("sweep"));
    args[0] = "sweep".to_string();
    args.extend(["--layers".to_string(), "1,2,1".to_string()]);
    let output = run(&args);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("duplicate"), "stderr: {}", stderr_of(&output));
}

#[test]
fn ablate_tags_the_report_with_the_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ablate");
    let mut args = train_args(&out);
    args[0] = "ablate".to_string();
    args.extend([
        "--epochs".to_string(),
        "2".to_string(),
        "--variant".to_string(),
        "no-edge-weight".to_string(),
    ]);
    let output = run(&args);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8(output.stdout).unwrap()).unwrap();
    assert_eq!(report["variant"], "no-edge-weight");
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk["variant"], "no-edge-weight");
}

#[test]
fn unknown_ablation_variant_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = train_args(&dir.path().join("ablate"));
    args[0] = "ablate".to_string();
    args.extend(["--variant".to_string(), "no-such-thing".to_string()]);
    let output = run(&args);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn identical_runs_produce_byte_identical_epoch_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let mut args = train_args(&out);
        args.extend(["--epochs".to_string(), "3".to_string()]);
        assert!(run(&args).status.success());
        logs.push(std::fs::read(out.join("epochs.csv")).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn runaway_learning_rate_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = train_args(&out);
    args.extend([
        "--epochs".to_string(),
        "3".to_string(),
        "--learning-rate".to_string(),
        "1e160".to_string(),
    ]);
    let output = run(&args);
    assert_eq!(output.status.code(), Some(4), "stderr: {}", stderr_of(&output));
    let err = stderr_of(&output);
    assert!(err.contains("non-finite"), "stderr: {err}");
}

#[test]
fn manifest_records_inputs_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = train_args(&out);
    args.extend(["--epochs".to_string(), "1".to_string(), "--seed".to_string(), "99".to_string()]);
    assert!(run(&args).status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["train_config"]["seed"], 99);
    assert_eq!(manifest["model_config"]["d_w"], 16);
    for role in ["train", "test", "parses-train", "parses-test", "glove"] {
        let digest = manifest["inputs"][role]["sha256"].as_str().unwrap();
        assert_eq!(digest.len(), 64, "{role} digest");
    }
}
