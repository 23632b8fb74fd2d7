use std::path::Path;
use std::process::{Command, Output, Stdio};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snoregan"))
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    run(args, cwd).status.code().expect("exit code")
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&["--help"], d), 0);
    assert_eq!(code(&["sweep", "--help"], d), 0);
    assert_eq!(code(&["--version"], d), 0);
    assert_eq!(code(&["bogus"], d), 1);
    assert_eq!(code(&["eval", "--runs", "many"], d), 1);
    let missing = run(&["eval", "--out", "x"], d);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("manifest"));
    assert_eq!(code(&["eval", "--manifest", "nope.csv", "--out", "x"], d), 2);
    assert_eq!(code(&["gen-corpus", "--jobs", "0", "--out", "x"], d), 2);
    std::fs::write(d.join("bad.json"), "{\"no_such_key\": 1}").unwrap();
    assert_eq!(code(&["gen-corpus", "--config", "bad.json", "--out", "x"], d), 2);
}

#[test]
fn default_output_directory_follows_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_snoregan"))
        .args(["gen-corpus", "--per-class", "1,1,1"])
        .env("SNOREGAN_OUT", dir.path())
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("gen-corpus/manifest.csv").exists());
    assert!(dir.path().join("gen-corpus/config.json").exists());
}

#[test]
fn pipeline_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = run(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["gen-corpus", "--per-class", "8,3,3", "--seed", "2", "--out", "corpus"]);
    ok(&["segment", "--manifest", "corpus/manifest.csv", "--out", "seg"]);
    assert!(d.join("seg/segments.csv").exists());
    ok(&["features", "--manifest", "corpus/manifest.csv", "--system", "functionals_svm", "--out", "feat"]);
    for part in ["train", "devel", "test"] {
        assert!(d.join(format!("feat/{part}.csv")).exists());
    }
    ok(&["train-gan", "--features", "feat/train.csv", "--iterations", "2", "--out", "gan"]);
    assert!(d.join("gan/model.json").exists() && d.join("gan/trace.csv").exists());
    ok(&["synth", "--model", "gan/model.json", "--per-class", "5", "--out", "synth"]);
    ok(&["augment", "--features", "feat/train.csv", "--method", "smote", "--out", "smote"]);
    ok(&["train-clf", "--features", "smote/augmented.csv", "--out", "clf"]);
    assert!(d.join("clf/svm.json").exists());
    ok(&["report", "--features", "feat/train.csv", "--out", "report"]);
    let svg = std::fs::read_to_string(d.join("report/pca.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.contains("<svg"));

    let echoed: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("clf/config.json")).unwrap()).unwrap();
    assert_eq!(echoed["command"], "train-clf");
}
