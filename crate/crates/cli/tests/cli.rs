use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sentiscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentiscope"))
        .args(args)
        .env_remove("SENTISCOPE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", out.status.code(), stdout(out), stderr(out));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_jsonl(path: &Path, rows: &[(String, String, &str, Option<&str>)]) {
    let mut text = String::new();
    for (id, body, label, emotion) in rows {
        let mut obj = serde_json::json!({ "id": id, "text": body, "sentiment": label });
        if let Some(e) = emotion {
            obj["emotion"] = Value::from(*e);
        }
        text.push_str(&obj.to_string());
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn separable(dir: &Path) -> PathBuf {
    let pools = [
        (["barang bagus", "kualitas bagus sekali", "pengiriman bagus", "bagus banget"], "positive"),
        (["barang jelek", "kualitas jelek sekali", "pengiriman jelek", "jelek banget"], "negative"),
        (["barang biasa", "kualitas biasa saja", "pengiriman biasa", "biasa banget"], "neutral"),
    ];
    let rows: Vec<_> = (0..30)
        .map(|i| {
            let (pool, label) = pools[i % 3];
            (format!("s{i:02}"), pool[(i / 3) % 4].to_string(), label, None)
        })
        .collect();
    let path = dir.join("separable.jsonl");
    write_jsonl(&path, &rows);
    path
}

fn skewed(dir: &Path, with_emotion: bool) -> PathBuf {
    let mut rows = Vec::new();
    let words = ["antek asing", "terima kasih", "kecewa berat", "harga naik", "george soros"];
    for (label, count, emotion) in [("negative", 632, "Marah"), ("neutral", 300, "Netral"), ("positive", 68, "Senang")]
    {
        for i in 0..count {
            let text = format!("{} {} komentar", words[i % words.len()], label);
            rows.push((format!("{label}-{i}"), text, label, with_emotion.then_some(emotion)));
        }
    }
    let path = dir.join(if with_emotion { "skew_emotion.jsonl" } else { "skew.jsonl" });
    write_jsonl(&path, &rows);
    path
}

fn quick_config(dir: &Path) -> PathBuf {
    let path = dir.join("quick.toml");
    fs::write(&path, "[train]\nn_rounds = 20\n").unwrap();
    path
}

fn train(dir: &Path, corpus: &Path, model: &Path, extra: &[&str]) -> Output {
    let cfg = quick_config(dir);
    let mut args = vec!["train", "--corpus", p(corpus), "--config", p(&cfg), "--model-out", p(model)];
    args.extend_from_slice(extra);
    sentiscope(&args)
}

#[test]
fn ingest_normalizes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    fs::write(&csv, "id,text,sentiment\n1,Barang bagus,Positive\n2,\"Jelek, telat\",negative\n3,biasa,neutral\n")
        .unwrap();
    let out_path = dir.path().join("out.jsonl");
    let out = sentiscope(&["ingest", "--input", p(&csv), "--format", "csv", "--out", p(&out_path)]);
    assert_ok(&out);
    let jsonl = fs::read_to_string(&out_path).unwrap();
    assert_eq!(jsonl.lines().count(), 3);
    let summary = stdout(&out);
    assert!(summary.contains("ingested 3 documents"), "{summary}");
    for label in ["negative", "neutral", "positive"] {
        assert!(summary.contains(label), "{summary}");
    }

    let again = dir.path().join("again.jsonl");
    assert_ok(&sentiscope(&["ingest", "--input", p(&out_path), "--out", p(&again)]));
    assert_eq!(fs::read(&again).unwrap(), jsonl.as_bytes());
}

#[test]
fn ingest_rejects_bad_label_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "text,sentiment\nbagus,positive\njelek,angry\n").unwrap();
    let out = sentiscope(&["ingest", "--input", p(&csv), "--out", p(&dir.path().join("o.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 3") && err.contains("angry"), "{err}");
}

#[test]
fn eda_reports_skewed_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = skewed(dir.path(), false);
    let out_dir = dir.path().join("eda");
    let out = sentiscope(&["eda", "--corpus", p(&corpus), "--out", p(&out_dir), "--top-n", "5"]);
    assert_ok(&out);
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("eda_report.json")).unwrap()).unwrap();
    let dist = &report["label_distribution"];
    assert_eq!(dist["negative"]["fraction"], 0.632);
    assert_eq!(dist["neutral"]["fraction"], 0.3);
    assert_eq!(dist["positive"]["fraction"], 0.068);
    assert!(report.get("emotion_sentiment_crosstab").is_none());
    for table in report["ngram_tables"].as_array().unwrap() {
        assert!(table["rows"].as_array().unwrap().len() <= 5);
    }
    for file in ["unigrams.csv", "bigrams.csv", "word_frequencies_overall.csv", "word_frequencies_sentiment.csv"] {
        let csv = fs::read_to_string(out_dir.join(file)).unwrap();
        assert!(csv.starts_with("scope,ngram,count\n"), "{file}");
    }
    assert!(!out_dir.join("word_frequencies_emotion.csv").exists());
    assert!(stdout(&out).contains("0.632"));
}

#[test]
fn eda_includes_emotions_and_skip_stemming() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = skewed(dir.path(), true);
    let out_dir = dir.path().join("eda");
    assert_ok(&sentiscope(&["eda", "--corpus", p(&corpus), "--out", p(&out_dir), "--skip-stemming"]));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("eda_report.json")).unwrap()).unwrap();
    let cells = report["emotion_sentiment_crosstab"].as_array().unwrap();
    assert_eq!(cells.iter().map(|c| c["count"].as_u64().unwrap()).sum::<u64>(), 1000);
    assert!(out_dir.join("word_frequencies_emotion.csv").exists());
    let bigrams = fs::read_to_string(out_dir.join("bigrams.csv")).unwrap();
    assert!(bigrams.contains("terima kasih"), "{bigrams}");
}

#[test]
fn eda_rejects_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.jsonl");
    fs::write(&corpus, "").unwrap();
    let out = sentiscope(&["eda", "--corpus", p(&corpus), "--out", p(&dir.path().join("eda"))]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn train_evaluate_predict_separable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = separable(dir.path());
    let model = dir.path().join("model.json");
    let out = sentiscope(&["train", "--corpus", p(&corpus), "--model-out", p(&model)]);
    assert_ok(&out);
    assert!(stdout(&out).contains("holdout accuracy 1.00"), "{}", stdout(&out));
    let metrics: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model.metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["metrics"]["accuracy"], 1.0);
    assert!(dir.path().join("model.confusion.csv").exists());
    assert!(dir.path().join("model.trainlog.json").exists());

    let eval_out = dir.path().join("eval.json");
    assert_ok(&sentiscope(&["evaluate", "--model", p(&model), "--corpus", p(&corpus), "--out", p(&eval_out)]));
    let report: Value = serde_json::from_str(&fs::read_to_string(&eval_out).unwrap()).unwrap();
    assert_eq!(report["metrics"]["accuracy"], 1.0);
    let csv = fs::read_to_string(dir.path().join("eval.confusion.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let sum: u64 = row.split(',').skip(1).map(|c| c.parse::<u64>().unwrap()).sum();
        assert_eq!(sum, 10, "{row}");
    }

    let out = sentiscope(&["predict", "--model", p(&model), "--text", "barang bagus banget"]);
    assert_ok(&out);
    let line: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(line["label"], "positive");

    let batch = dir.path().join("batch.txt");
    fs::write(&batch, "barang jelek\n\nbiasa saja\n😀\nbagus\n").unwrap();
    let out = sentiscope(&["predict", "--model", p(&model), "--input", p(&batch)]);
    assert_ok(&out);
    let lines: Vec<Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    let labels: Vec<&str> = lines.iter().map(|l| l["label"].as_str().unwrap()).collect();
    assert_eq!(labels[0], "negative");
    assert_eq!(labels[2], "neutral");
    assert_eq!(labels[4], "positive");
    for l in &lines {
        let sum: f64 = l["probabilities"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    let batch = dir.path().join("batch.jsonl");
    fs::write(&batch, "{\"id\": \"a\", \"text\": \"jelek\"}\n{\"id\": 7, \"text\": \"bagus\"}\n").unwrap();
    let out = sentiscope(&["predict", "--model", p(&model), "--input", p(&batch)]);
    assert_ok(&out);
    let lines: Vec<Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["id"], "a");
    assert_eq!(lines[1]["id"], 7);
}

#[test]
fn training_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = skewed(dir.path(), false);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_ok(&train(dir.path(), &corpus, &a, &["--seed", "7"]));
    assert_ok(&train(dir.path(), &corpus, &b, &["--seed", "7"]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    for suffix in [".metrics.json", ".trainlog.json", ".confusion.csv"] {
        assert_eq!(
            fs::read(dir.path().join(format!("a{suffix}"))).unwrap(),
            fs::read(dir.path().join(format!("b{suffix}"))).unwrap()
        );
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = skewed(dir.path(), false);
    let cfg = quick_config(dir.path());
    let run = |name: &str, env: Option<&str>, extra: &[&str]| {
        let model = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sentiscope"));
        cmd.args(["train", "--corpus", p(&corpus), "--config", p(&cfg), "--model-out", p(&model)]).args(extra);
        cmd.env_remove("SENTISCOPE_SEED");
        if let Some(seed) = env {
            cmd.env("SENTISCOPE_SEED", seed);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read(dir.path().join(name.replace(".json", ".metrics.json"))).unwrap()
    };
    assert_eq!(run("env.json", Some("5"), &[]), run("flag.json", None, &["--seed", "5"]));
    assert_eq!(run("both.json", Some("99"), &["--seed", "5"]), run("flag2.json", None, &["--seed", "5"]));
}

#[test]
fn balanced_oversampled_training_reports_recall() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = skewed(dir.path(), false);
    let model = dir.path().join("m.json");
    assert_ok(&train(dir.path(), &corpus, &model, &["--class-weight", "balanced", "--oversample"]));
    let metrics: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m.metrics.json")).unwrap()).unwrap();
    let per_class = metrics["metrics"]["per_class"].as_array().unwrap();
    assert_eq!(per_class.len(), 3);
    assert!(per_class.iter().all(|c| c["recall"].is_number()));
    assert!(metrics["n_train_fitted"].as_u64() > metrics["n_train"].as_u64());
}

#[test]
fn degenerate_training_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("emoji.jsonl");
    let rows: Vec<_> =
        (0..10).map(|i| (format!("e{i}"), "😀 !!! 123".to_string(), ["negative", "positive"][i % 2], None)).collect();
    write_jsonl(&corpus, &rows);
    let out = train(dir.path(), &corpus, &dir.path().join("m.json"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    let single = dir.path().join("single.jsonl");
    let rows: Vec<_> = (0..10).map(|i| (format!("p{i}"), "bagus sekali".to_string(), "positive", None)).collect();
    write_jsonl(&single, &rows);
    let out = train(dir.path(), &single, &dir.path().join("m2.json"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = separable(dir.path());
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[train]\nlearning_rate = 2.0\n").unwrap();
    let out = sentiscope(&[
        "train",
        "--corpus",
        p(&corpus),
        "--config",
        p(&cfg),
        "--model-out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("learning_rate"), "{}", stderr(&out));
    assert!(!dir.path().join("m.json").exists());

    fs::write(&cfg, "[trian]\nn_rounds = 3\n").unwrap();
    let out = sentiscope(&[
        "train",
        "--corpus",
        p(&corpus),
        "--config",
        p(&cfg),
        "--model-out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_and_predict_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = separable(dir.path());
    let model = dir.path().join("model.json");
    assert_ok(&train(dir.path(), &corpus, &model, &[]));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"text\": \"bagus\", \"sentiment\": \"sarcastic\"}\n").unwrap();
    let out =
        sentiscope(&["evaluate", "--model", p(&model), "--corpus", p(&bad), "--out", p(&dir.path().join("e.json"))]);
    assert_eq!(out.status.code(), Some(2));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"format_version\": \"sentiscope-0\"}").unwrap();
    let out = sentiscope(&["predict", "--model", p(&broken), "--text", "bagus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sentiscope-0"), "{}", stderr(&out));
    let out = sentiscope(&["predict", "--model", p(&dir.path().join("missing.json")), "--text", "bagus"]);
    assert_eq!(out.status.code(), Some(2));
}
