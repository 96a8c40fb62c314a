use std::path::Path;
use std::process::{Command, Output};

fn factqa(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factqa"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FACTQA_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn synth(dir: &Path) {
    let out = factqa(&["synth", "--out", "data", "--images", "40", "--questions-per-type", "3"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(factqa(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(factqa(&["classify"], dir.path()).status.code(), Some(1));
    assert_eq!(factqa(&["pipeline", "--method", "telepathy"], dir.path()).status.code(), Some(1));
    assert_eq!(factqa(&["pipeline", "--set", "colour=red"], dir.path()).status.code(), Some(1));
    assert_eq!(factqa(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn missing_annotations_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = factqa(
        &["pipeline", "--kb", "data/kb.jsonl", "--annotations", "nope.jsonl", "--dataset", "data/dataset.jsonl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("annotations ingest"), "{err}");
}

#[test]
fn strict_ingest_rejects_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("kb.jsonl"), "{\"subject\":\"Cat\",\"predicate\":\"IsA\",\"object\":\"Pet\",\"source\":\"ConceptNet\"}\nnot json\n").unwrap();
    let lenient = factqa(&["ingest", "--kb", "kb.jsonl"], dir.path());
    assert!(lenient.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&lenient.stdout).unwrap();
    assert_eq!(summary["kb"]["facts"], 1);
    assert_eq!(summary["kb"]["rejects"].as_array().unwrap().len(), 1);
    assert_eq!(factqa(&["ingest", "--kb", "kb.jsonl", "--strict"], dir.path()).status.code(), Some(2));
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_factqa"))
        .args(["synth", "--images", "30", "--questions-per-type", "2"])
        .current_dir(dir.path())
        .env("FACTQA_OUTPUT_DIR", "elsewhere")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("elsewhere/kb.jsonl").exists());
}

#[test]
fn splits_train_answer_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let ok = |args: &[&str]| {
        let out = factqa(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&["splits", "--data", "data/dataset.jsonl", "-n", "2", "--out", "splits.json"]);
    ok(&["train", "--data", "data/dataset.jsonl", "--splits", "splits.json", "--split", "0", "--out", "qq.json", "--epochs", "2", "--dim", "8"]);
    let ranked: serde_json::Value = serde_json::from_str(&ok(&["classify", "--ckpt", "qq.json", "--question", "what is it used for", "-k", "2"])).unwrap();
    assert_eq!(ranked.as_array().unwrap().len(), 2);

    let gt = ok(&[
        "answer", "--kb", "data/kb.jsonl", "--annotations", "data/annotations.jsonl", "--image", "img00000",
        "--question", "what is the object used for", "--gt-query-type", "UsedFor,Object,KB",
    ]);
    let outcome: serde_json::Value = serde_json::from_str(&gt).unwrap();
    assert!(outcome["candidates"].is_array());

    std::fs::write(d.join("run.conf"), "kb = data/kb.jsonl\nannotations = data/annotations.jsonl\ndataset = data/dataset.jsonl\nsplits = splits.json\nmethod = frequent\n").unwrap();
    ok(&["pipeline", "--config", "run.conf", "--out", "run"]);
    let table = ok(&["evaluate", "--pred", "run/predictions.jsonl", "--data", "data/dataset.jsonl", "--splits", "splits.json", "--method", "frequent"]);
    assert_eq!(table, std::fs::read_to_string(d.join("run/report.txt")).unwrap());
}
