use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use subjfuse_core::corpus::LanguageCode;
use subjfuse_core::synthetic::{self, SyntheticConfig};

fn subjfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subjfuse"))
        .args(args)
        .env_remove("SUBJFUSE_DATA_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = subjfuse(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    subjfuse(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let syn = synthetic::generate(&SyntheticConfig::desk(LanguageCode::new("xx").unwrap(), 3)).unwrap();
        syn.write_corpus(&dir.path().join("data")).unwrap();
        syn.write_cache(&dir.path().join("planted.jsonl")).unwrap();
        Fixture { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn spec(&self, variant: &str, calibrate: bool) -> PathBuf {
        let spec = serde_json::json!({
            "mode": "monolingual",
            "train_langs": ["xx"],
            "variant": variant,
            "loss": "focal",
            "calibrate": calibrate,
            "training": { "learning_rate": 0.01 },
            "seed": 5,
            "data_root": "data",
            "sentiment_cache": "planted.jsonl",
        });
        let path = self.path(&format!("{variant}-{calibrate}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
        path
    }
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn staged_pipeline_agrees_with_the_run_directory() {
    let f = Fixture::new();
    let data = f.path("data");

    let table = ok(&["ingest", "--data-root", s(&data), "--lang", "xx", "--out", s(&f.path("ingest/summary.json"))]);
    assert!(table.contains("train") && table.contains("240"));
    assert_eq!(read_json(&f.path("ingest/summary.json"))[0]["subj"], 60);

    ok(&["sentiment-cache", "--data-root", s(&data), "--lang", "xx", "--out", s(&f.path("stub.jsonl"))]);
    assert!(f.path("stub.jsonl.sha256").is_file());

    let fused = f.path("runs/fused");
    ok(&["train", "--config", s(&f.spec("sentiment_fused", true)), "--out", s(&fused)]);
    for name in ["checkpoint.json", "threshold.json", "dev_probs.tsv", "metrics_xx.json", "results.csv", "manifest.json"] {
        assert!(fused.join(name).is_file(), "{name}");
    }

    let threshold = f.path("stage/threshold.json");
    ok(&["calibrate", "--preds", s(&fused.join("dev_probs.tsv")), "--gold", s(&fused.join("dev.tsv")), "--out", s(&threshold)]);
    assert_eq!(read_json(&threshold)["tau"], read_json(&fused.join("threshold.json"))["tau"]);

    let preds = f.path("stage/preds.tsv");
    ok(&[
        "predict", "--checkpoint", s(&fused.join("checkpoint.json")), "--input", s(&data.join("xx/dev_test.tsv")),
        "--lang", "xx", "--sentiment-cache", s(&f.path("planted.jsonl")), "--threshold", s(&threshold), "--out", s(&preds),
    ]);
    assert_eq!(std::fs::read_to_string(&preds).unwrap(), std::fs::read_to_string(fused.join("devtest_probs_xx.tsv")).unwrap());

    let metrics = f.path("stage/metrics.json");
    ok(&[
        "evaluate", "--preds", s(&preds), "--gold", s(&data.join("xx/dev_test.tsv")), "--lang", "xx",
        "--variant", "sentiment", "--threshold", s(&threshold), "--out", s(&metrics),
    ]);
    assert_eq!(read_json(&metrics), read_json(&fused.join("metrics_xx.json")));

    let manifest = std::fs::read_to_string(f.path("stage/manifest.jsonl")).unwrap();
    let commands: Vec<String> = manifest
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["command"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(commands, ["calibrate", "predict", "evaluate"]);
}

#[test]
fn ablation_analysis_and_report() {
    let f = Fixture::new();
    let (cal, uncal, base) = (f.path("runs/cal"), f.path("runs/uncal"), f.path("runs/base"));
    ok(&["train", "--config", s(&f.spec("sentiment_fused", true)), "--out", s(&cal)]);
    ok(&["train", "--config", s(&f.spec("sentiment_fused", true)), "--calibrate", "false", "--seed", "9", "--out", s(&uncal)]);
    ok(&["train", "--config", s(&f.spec("sentiment_fused", true)), "--variant", "baseline", "--out", s(&base)]);

    let csv = ok(&["ablate", "--calibrated", s(&cal), "--uncalibrated", s(&uncal), "--out", s(&f.path("ablation.csv"))]);
    assert!(csv.starts_with("language,tau,threshold_macro_f1"));
    let table = read_json(&f.path("ablation.json"));
    assert_eq!(table["decision"]["tau"], read_json(&cal.join("threshold.json"))["tau"]);
    assert_eq!(code(&["ablate", "--calibrated", s(&cal), "--uncalibrated", s(&base), "--out", s(&f.path("x.csv"))]), 2);

    ok(&[
        "analyze", "disagreement", "--run-a", s(&cal), "--run-b", s(&base), "--lang", "xx",
        "--sentiment-cache", s(&f.path("planted.jsonl")), "--out", s(&f.path("disagreement.json")),
    ]);
    let d = read_json(&f.path("disagreement.json"));
    let total: u64 = ["a_only_correct", "b_only_correct", "both_correct", "neither_correct"]
        .iter()
        .map(|k| d["counts"][k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 100);

    let dist = ok(&[
        "analyze", "distribution", "--data-root", s(&f.path("data")), "--lang", "xx",
        "--sentiment-cache", s(&f.path("planted.jsonl")), "--out", s(&f.path("dist.csv")),
    ]);
    assert_eq!(dist.lines().count(), 1 + 2 * 3);

    let report = ok(&["report", "--run", s(&cal), "--run", s(&base), "--out", s(&f.path("table.csv"))]);
    assert_eq!(report.lines().count(), 3);
    assert!(report.contains("sentiment_fused") && report.contains("baseline"));
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let data = f.path("data");
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["train", "--bogus"]), 1);
    assert_eq!(code(&["train", "--config", s(&f.spec("baseline", false)), "--variant", "nope", "--out", "x"]), 1);
    assert_eq!(code(&["--jobs", "0", "ingest", "--data-root", s(&data), "--lang", "xx", "--out", s(&f.path("o.json"))]), 1);
    assert_eq!(code(&["--help"]), 0);

    std::fs::create_dir_all(f.path("bad/xx")).unwrap();
    for split in ["train", "dev", "dev_test"] {
        std::fs::copy(data.join(format!("xx/{split}.tsv")), f.path(&format!("bad/xx/{split}.tsv"))).unwrap();
    }
    std::fs::write(f.path("bad/xx/dev.tsv"), "sentence_id\tsentence\tlabel\na\tok\tOBJ\nb\tbad\tMAYBE\n").unwrap();
    assert_eq!(code(&["ingest", "--data-root", s(&f.path("bad")), "--lang", "xx", "--out", s(&f.path("o.json"))]), 2);
    std::fs::write(f.path("bad/xx/dev.tsv"), "sentence_id\tsentence\tlabel\na\tok\tOBJ\textra\n").unwrap();
    assert_eq!(code(&["ingest", "--data-root", s(&f.path("bad")), "--lang", "xx", "--out", s(&f.path("o.json"))]), 2);

    assert_eq!(code(&["ingest", "--data-root", s(&data), "--lang", "zz", "--out", s(&f.path("o.json"))]), 3);
    let spec = f.spec("sentiment_fused", false);
    assert_eq!(code(&["train", "--config", s(&spec), "--sentiment-cache", s(&f.path("absent.jsonl")), "--out", s(&f.path("r"))]), 3);
    assert_eq!(
        code(&["predict", "--checkpoint", s(&f.path("none.json")), "--input", s(&data.join("xx/dev.tsv")), "--lang", "xx", "--out", s(&f.path("p.tsv"))]),
        3
    );

    // A stub cache lacks nothing, but a planted cache restricted to one split does.
    let partial = f.path("partial.jsonl");
    let full = std::fs::read_to_string(f.path("planted.jsonl")).unwrap();
    let kept: String = full.lines().filter(|l| l.contains("\"train-")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&partial, kept).unwrap();
    assert_eq!(code(&["train", "--config", s(&spec), "--sentiment-cache", s(&partial), "--out", s(&f.path("r2"))]), 3);
}

#[test]
fn jobs_flag_does_not_change_results() {
    let f = Fixture::new();
    let spec = f.spec("sentiment_fused", true);
    ok(&["--jobs", "1", "train", "--config", s(&spec), "--out", s(&f.path("a"))]);
    ok(&["--jobs", "3", "train", "--config", s(&spec), "--out", s(&f.path("b"))]);
    for name in ["checkpoint.json", "threshold.json", "metrics_xx.json"] {
        assert_eq!(std::fs::read(f.path("a").join(name)).unwrap(), std::fs::read(f.path("b").join(name)).unwrap(), "{name}");
    }
}
