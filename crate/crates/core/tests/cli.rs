use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emoanneal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic data and trained models shared by every test in this file.
fn workspace() -> &'static PathBuf {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-workspace");
        let _ = std::fs::remove_dir_all(&root);
        let data = root.join("data");
        ok(&["synth", "--out", s(&data), "--pairs", "800", "--judge", "150", "--test", "30"]);
        ok(&[
            "train",
            "--corpus",
            s(&data.join("train.tsv")),
            "--judge-corpus",
            s(&data.join("judge.tsv")),
            "--out",
            s(&root.join("models")),
        ]);
        root
    })
}

fn models() -> PathBuf {
    workspace().join("models")
}

#[test]
fn train_writes_model_files_and_config_echo() {
    let m = models();
    for f in ["vocab.tsv", "ngram.txt", "ibm1.txt", "emotion.txt", "judge.txt", "config.txt"] {
        assert!(m.join(f).is_file(), "missing {f}");
    }
    let echo = std::fs::read_to_string(m.join("config.txt")).unwrap();
    assert!(echo.contains("alpha=8\n"));
    assert!(echo.contains("tau_init=0.015\n"));
    assert!(echo.contains("groups=20\n"));
}

#[test]
fn retraining_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = workspace().join("data");
    let out = dir.path().join("again");
    ok(&["train", "--corpus", s(&data.join("train.tsv")), "--judge-corpus", s(&data.join("judge.tsv")), "--out", s(&out)]);
    for f in ["vocab.tsv", "ngram.txt", "ibm1.txt", "emotion.txt", "judge.txt", "config.txt"] {
        assert_eq!(std::fs::read(models().join(f)).unwrap(), std::fs::read(out.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "--corpus", s(&dir.path().join("nope.tsv")), "--out", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.tsv"));
}

#[test]
fn absent_class_warns_and_records_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.tsv");
    std::fs::write(
        &corpus,
        "how are you\tfine thanks\thappy\nwhat now\tno idea\tsad\nthe cat\tcute cat\tlike\nbad day\twhat a mess\tangry\nlunch\tyuck\tdisgust\n",
    )
    .unwrap();
    let out = run(&["train", "--corpus", s(&corpus), "--out", s(&dir.path().join("m"))]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("warning") && err.contains("neutral"), "{err}");
    let model = std::fs::read_to_string(dir.path().join("m").join("emotion.txt")).unwrap();
    assert!(model.contains("uniform_prior_fallback true"), "{model}");
}

#[test]
fn unknown_emotion_lists_labels() {
    let out = run(&["respond", "--models", s(&models()), "--post", "hello", "--emotion", "ecstatic"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for label in ["happy", "angry", "disgust", "sad", "like", "neutral"] {
        assert!(err.contains(label), "{err}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["respond", "--models", s(&models())]).status.code(), Some(1));
    let out = run(&["decode", "--models", s(&models()), "--post", "hi", "--decoder", "diverse", "--beam-size", "2", "--groups", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["decode", "--models", s(&models()), "--post", "hi", "--alpha", "lots"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_iterations_returns_the_beam_response() {
    let post = "what do you think of the oven ?";
    let decoded = ok(&["decode", "--models", s(&models()), "--post", post]);
    let best = decoded.lines().next().unwrap().split('\t').nth(1).unwrap().to_string();
    let said = ok(&["respond", "--models", s(&models()), "--post", post, "--emotion", "angry", "--iters", "0"]);
    assert_eq!(said.trim_end(), best);
}

#[test]
fn respond_is_deterministic_including_traces() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str| {
        let trace = dir.path().join(name);
        let text = ok(&[
            "respond", "--models", s(&models()), "--post", "my boss and the deadline", "--emotion", "sad", "--seed", "3",
            "--tau-init", "1", "--decay", "0.02", "--trace", s(&trace),
        ]);
        (text, std::fs::read(trace).unwrap())
    };
    let (a, b) = (go("a.jsonl"), go("b.jsonl"));
    assert_eq!(a, b);
    let shown = ok(&["trace", "--input", s(&dir.path().join("a.jsonl")), "--models", s(&models())]);
    assert_eq!(shown.lines().filter(|l| l.contains("accept") || l.contains("reject")).count(), 50);
    assert!(shown.contains("delta") && shown.contains("tau"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep settings\nalphas_are_not_keys_here=1\n").unwrap();
    let out = run(&["decode", "--models", s(&models()), "--post", "hi", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1), "unknown keys are rejected");

    std::fs::write(&cfg, "beam_size=4\ngroups=2\ndecoder=diverse\n").unwrap();
    let out = run(&["decode", "--models", s(&models()), "--post", "the pizza cheese thing", "--config", s(&cfg), "--beam-size", "6"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beam_size=6") && err.contains("groups=2") && err.contains("decoder=diverse"), "{err}");
    assert!(String::from_utf8_lossy(&out.stdout).lines().count() <= 6);
}

#[test]
fn evaluate_writes_reports_and_shows_the_lift() {
    let dir = tempfile::tempdir().unwrap();
    let test = workspace().join("data").join("test.tsv");
    let emb = workspace().join("data").join("embeddings.txt");
    let eval = |name: &str, iters: &str| {
        let out = dir.path().join(name);
        ok(&["evaluate", "--models", s(&models()), "--test", s(&test), "--embeddings", s(&emb), "--out", s(&out), "--iters", iters]);
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
        assert!(out.join("outputs.csv").is_file() && out.join("config.txt").is_file());
        json
    };
    let (bs, sa, again) = (eval("bs", "0"), eval("sa", "50"), eval("sa2", "50"));
    assert_eq!(sa, again);
    assert!(sa["emotion_accuracy"].as_f64().unwrap() > bs["emotion_accuracy"].as_f64().unwrap());
    assert_eq!(sa["held_out_judge"], serde_json::Value::Bool(true));
    assert!(sa["embedding"]["average"].is_number());
    assert_eq!(
        std::fs::read(dir.path().join("sa/outputs.csv")).unwrap(),
        std::fs::read(dir.path().join("sa2/outputs.csv")).unwrap()
    );
}

#[test]
fn empty_test_split_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.tsv");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["evaluate", "--models", s(&models()), "--test", s(&empty), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_alpha_writes_csv_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let test = workspace().join("data").join("test.tsv");
    let printed = ok(&["sweep-alpha", "--models", s(&models()), "--test", s(&test), "--alphas", "0,8", "--out", s(&csv)]);
    let written = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(printed, written);
    let mut lines = written.lines();
    assert_eq!(lines.next(), Some("alpha,bleu1,bleu2,dist1,dist2,emotion_accuracy"));
    assert!(lines.next().unwrap().starts_with("0.0,"));
    assert!(lines.next().unwrap().starts_with("8.0,"));
    assert!(dir.path().join("sweep.config.txt").is_file());
    let bad = run(&["sweep-alpha", "--models", s(&models()), "--test", s(&test), "--alphas", "0,x", "--out", s(&csv)]);
    assert_eq!(bad.status.code(), Some(1));
}
