//! `sentiscope` command-line front end.
//!
//! Exit codes: 0 on success, 2 for input or configuration errors, 3 when
//! training degenerates (no usable vocabulary, a single class, an empty
//! split side).

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use sentiscope_core::corpus::{self, load_corpus, CorpusError, CorpusFormat, LabelShare};
use sentiscope_core::eda::{self, FrequencyScope, NgramTable};
use sentiscope_core::eval::{compute_metrics, majority_baseline};
use sentiscope_core::features::FeatureError;
use sentiscope_core::gbdt::{ClassWeighting, GbdtError};
use sentiscope_core::pipeline::{train_pipeline, PipelineError};
use sentiscope_core::{ConfusionMatrix, LabeledCorpus, MetricsReport, PipelineModel, Sentiment};

use config::{CliConfig, Overrides};

const SEED_ENV: &str = "SENTISCOPE_SEED";

#[derive(Debug, Parser)]
#[command(name = "sentiscope", version, about = "Sentiment classification for short Indonesian comments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a CSV or JSONL corpus and write it as normalized JSONL.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the input file extension.
        #[arg(long)]
        format: Option<CorpusFormat>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write label, length and n-gram statistics as JSON and CSV files.
    Eda {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        top_n: usize,
        /// Count n-grams on unstemmed tokens.
        #[arg(long)]
        skip_stemming: bool,
        /// Preprocessing settings are read from the `[preprocess]` section.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Split, train, save the model and report holdout metrics.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Randomly duplicate minority-class training documents.
        #[arg(long)]
        oversample: bool,
        #[arg(long, value_name = "none|balanced")]
        class_weight: Option<ClassWeighting>,
        /// Stopword list replacing the built-in one.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Score a saved model on a labelled corpus.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Metrics JSON; the confusion matrix goes to `<stem>.confusion.csv` beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one JSON line per input text.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        text: Option<String>,
        /// `.jsonl` files hold objects with `text` and optional `id`; any
        /// other file is read as one text per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// `dir/stem<suffix>` for a path `dir/stem.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn read_corpus(path: &Path, format: Option<CorpusFormat>) -> Result<LabeledCorpus> {
    let format = format.unwrap_or_else(|| CorpusFormat::from_path(path));
    load_corpus(path, format).with_context(|| format!("loading corpus {}", path.display()))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(None),
    }
}

fn print_distribution(dist: &BTreeMap<Sentiment, LabelShare>) {
    for (label, share) in dist {
        println!("  {label:<8} {:>7}  {:.3}", share.count, share.fraction);
    }
}

fn cmd_ingest(input: &Path, format: Option<CorpusFormat>, out: &Path) -> Result<()> {
    let corpus = read_corpus(input, format)?;
    write_file(out, corpus.to_jsonl())?;
    println!("ingested {} documents into {}", corpus.len(), out.display());
    print_distribution(&corpus::label_distribution(&corpus)?);
    Ok(())
}

fn cmd_eda(corpus_path: &Path, out: &Path, top_n: usize, skip_stemming: bool, config: Option<&Path>) -> Result<()> {
    let overrides = Overrides { skip_stemming, env_seed: env_seed()?, ..Overrides::default() };
    let cfg = CliConfig::load(config, &overrides)?;
    let corpus = read_corpus(corpus_path, None)?;
    let report = eda::build_report(&corpus, &cfg.preprocess, top_n)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("eda_report.json"), to_json(&report))?;
    let by_n = |n: usize| report.ngram_tables.iter().filter(|t| t.n == n).cloned().collect::<Vec<NgramTable>>();
    write_file(&out.join("unigrams.csv"), eda::tables_to_csv(&by_n(1)))?;
    write_file(&out.join("bigrams.csv"), eda::tables_to_csv(&by_n(2)))?;
    for scope in [FrequencyScope::Overall, FrequencyScope::PerSentiment, FrequencyScope::PerEmotion] {
        let name = match scope {
            FrequencyScope::Overall => "overall",
            FrequencyScope::PerSentiment => "sentiment",
            FrequencyScope::PerEmotion => "emotion",
        };
        match eda::export_word_frequencies(&corpus, &cfg.preprocess, scope) {
            Ok(tables) => write_file(&out.join(format!("word_frequencies_{name}.csv")), eda::tables_to_csv(&tables))?,
            Err(eda::EdaError::NoEmotionLabels) => {}
            Err(e) => return Err(e.into()),
        }
    }

    println!("{} documents; report written to {}", report.n_documents, out.display());
    print_distribution(&report.label_distribution);
    Ok(())
}

fn evaluate_model(model: &PipelineModel, corpus: &LabeledCorpus) -> Result<(ConfusionMatrix, MetricsReport)> {
    let truth: Vec<usize> = corpus.documents().iter().map(|d| d.sentiment.index()).collect();
    let pred: Vec<usize> = corpus.documents().iter().map(|d| model.predict(&d.text).label.index()).collect();
    let cm = ConfusionMatrix::from_indices(&truth, &pred, model.class_names().to_vec())?;
    let metrics = compute_metrics(&cm)?;
    Ok((cm, metrics))
}

struct TrainArgs<'a> {
    corpus: &'a Path,
    config: Option<&'a Path>,
    model_out: &'a Path,
    overrides: Overrides,
}

fn cmd_train(args: TrainArgs<'_>) -> Result<()> {
    let cfg = CliConfig::load(args.config, &args.overrides)?;
    let corpus = read_corpus(args.corpus, None)?;
    let (train, test) = corpus::split(&corpus, &cfg.split)?;
    let fit_on = if cfg.oversample { corpus::oversample(&train, cfg.train.seed)? } else { train.clone() };

    let (model, log) = train_pipeline::<f64>(&fit_on, &cfg.preprocess, &cfg.features, &cfg.train)?;
    model.save(args.model_out).with_context(|| format!("saving model {}", args.model_out.display()))?;

    let (cm, metrics) = evaluate_model(&model, &test)?;
    let baseline = majority_baseline(&train, &test)?;
    let summary = json!({
        "n_train": train.len(),
        "n_train_fitted": fit_on.len(),
        "n_test": test.len(),
        "metrics": metrics,
        "confusion_matrix": cm,
        "majority_baseline": baseline,
    });
    write_file(&sibling(args.model_out, ".metrics.json"), to_json(&summary))?;
    write_file(&sibling(args.model_out, ".confusion.csv"), cm.to_csv())?;
    write_file(&sibling(args.model_out, ".trainlog.json"), to_json(&log))?;

    println!(
        "holdout accuracy {:.2} macro-F1 {:.2} ({} test documents)",
        metrics.accuracy,
        metrics.macro_f1,
        test.len()
    );
    eprintln!(
        "trained {} rounds on {} documents, vocabulary {} terms, {:.2}s",
        log.round_losses.len(),
        log.n_train_docs,
        log.vocabulary_size,
        log.wall_time_secs
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<PipelineModel> {
    PipelineModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn cmd_evaluate(model_path: &Path, corpus_path: &Path, out: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let corpus = read_corpus(corpus_path, None)?;
    let (cm, metrics) = evaluate_model(&model, &corpus)?;
    let report = json!({ "n_documents": corpus.len(), "metrics": metrics, "confusion_matrix": cm });
    write_file(out, to_json(&report))?;
    write_file(&sibling(out, ".confusion.csv"), cm.to_csv())?;
    println!("accuracy {:.4} macro-F1 {:.4} ({} documents)", metrics.accuracy, metrics.macro_f1, corpus.len());
    Ok(())
}

fn prediction_line(model: &PipelineModel, id: Option<&serde_json::Value>, text: &str) -> String {
    let p = model.predict(text);
    let probabilities: serde_json::Map<String, serde_json::Value> =
        model.class_names().iter().cloned().zip(p.probabilities.iter().map(|&v| json!(v))).collect();
    let mut line = serde_json::Map::new();
    if let Some(id) = id {
        line.insert("id".into(), id.clone());
    }
    line.insert("label".into(), json!(p.label));
    line.insert("probabilities".into(), serde_json::Value::Object(probabilities));
    serde_json::Value::Object(line).to_string()
}

fn cmd_predict(model_path: &Path, text: Option<&str>, input: Option<&Path>) -> Result<()> {
    let model = load_model(model_path)?;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    if let Some(text) = text {
        writeln!(out, "{}", prediction_line(&model, None, text))?;
    }
    if let Some(path) = input {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let jsonl = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl"));
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.with_context(|| format!("reading {}", path.display()))?;
            if !jsonl {
                writeln!(out, "{}", prediction_line(&model, None, &line))?;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).with_context(|| format!("{}:{}: invalid JSON", path.display(), i + 1))?;
            let text = value
                .get("text")
                .and_then(|t| t.as_str())
                .ok_or_else(|| anyhow!("{}:{}: missing string field `text`", path.display(), i + 1))?;
            writeln!(out, "{}", prediction_line(&model, value.get("id"), text))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// 3 for training degeneracies, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let degenerate = match cause.downcast_ref::<PipelineError>() {
            Some(PipelineError::Features(FeatureError::EmptyVocabulary { .. })) => true,
            Some(PipelineError::Gbdt(GbdtError::SingleClassTraining | GbdtError::DegenerateLeaf)) => true,
            _ => matches!(cause.downcast_ref::<CorpusError>(), Some(CorpusError::DegenerateSplit(_))),
        };
        if degenerate {
            return 3;
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, format, out } => cmd_ingest(&input, format, &out),
        Command::Eda { corpus, out, top_n, skip_stemming, config } => {
            cmd_eda(&corpus, &out, top_n, skip_stemming, config.as_deref())
        }
        Command::Train { corpus, config, model_out, seed, oversample, class_weight, stopwords } => {
            let overrides = Overrides {
                seed,
                env_seed: env_seed()?,
                oversample,
                class_weighting: class_weight,
                skip_stemming: false,
                stopwords,
            };
            cmd_train(TrainArgs { corpus: &corpus, config: config.as_deref(), model_out: &model_out, overrides })
        }
        Command::Evaluate { model, corpus, out } => cmd_evaluate(&model, &corpus, &out),
        Command::Predict { model, text, input } => {
            if text.is_none() && input.is_none() {
                bail!("one of --text or --input is required");
            }
            cmd_predict(&model, text.as_deref(), input.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
