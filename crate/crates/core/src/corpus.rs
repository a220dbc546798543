//! Labeled comment corpora: loading, label statistics, splitting, rebalancing.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::PortableRng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing required column `{column}`{}", line_suffix(*.line))]
    MissingColumn { column: String, line: Option<usize> },
    #[error("line {line}: bad sentiment label `{value}` (expected negative, neutral or positive)")]
    BadLabel { line: usize, value: String },
    #[error("line {line}: text is empty")]
    EmptyText { line: usize },
    #[error("line {line}: id is empty")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("invalid split spec: {0}")]
    InvalidSplitSpec(String),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" on line {l}")).unwrap_or_default()
}

/// Three-way polarity label. Variant order is also lexicographic name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn class_names() -> Vec<String> {
        Self::ALL.iter().map(|s| s.as_str().to_string()).collect()
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sentiment `{0}`")]
pub struct ParseSentimentError(pub String);

impl FromStr for Sentiment {
    type Err = ParseSentimentError;

    /// Case-insensitive: "Negative" and "negative" are the same label.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "negative" => Ok(Sentiment::Negative),
            "neutral" => Ok(Sentiment::Neutral),
            "positive" => Ok(Sentiment::Positive),
            _ => Err(ParseSentimentError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawComment {
    pub id: String,
    pub text: String,
    pub sentiment: Sentiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<String>,
}

impl RawComment {
    pub fn new(id: impl Into<String>, text: impl Into<String>, sentiment: Sentiment) -> Self {
        Self { id: id.into(), text: text.into(), sentiment, emotion: None }
    }

    pub fn with_emotion(mut self, emotion: impl Into<String>) -> Self {
        self.emotion = Some(emotion.into());
        self
    }
}

/// An ordered, validated collection of comments. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    documents: Vec<RawComment>,
    label_counts: BTreeMap<Sentiment, usize>,
}

impl LabeledCorpus {
    /// Validates ids (non-empty, unique) and texts (non-blank). Errors report
    /// the 1-based position of the offending document.
    pub fn new(documents: Vec<RawComment>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            let line = i + 1;
            if doc.id.is_empty() {
                return Err(CorpusError::EmptyId { line });
            }
            if doc.text.trim().is_empty() {
                return Err(CorpusError::EmptyText { line });
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId { line, id: doc.id.clone() });
            }
        }
        Ok(Self::from_validated(documents))
    }

    fn from_validated(documents: Vec<RawComment>) -> Self {
        let mut label_counts = BTreeMap::new();
        for doc in &documents {
            *label_counts.entry(doc.sentiment).or_insert(0) += 1;
        }
        Self { documents, label_counts }
    }

    pub fn documents(&self) -> &[RawComment] {
        &self.documents
    }

    /// Counts for the labels that occur at least once.
    pub fn label_counts(&self) -> &BTreeMap<Sentiment, usize> {
        &self.label_counts
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn into_documents(self) -> Vec<RawComment> {
        self.documents
    }

    /// Normalized JSONL: one object per document with keys id, text,
    /// sentiment and (when present) emotion.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(doc).expect("comment serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// `.csv` selects CSV; anything else is read as JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<LabeledCorpus, CorpusError> {
    let file = File::open(path.as_ref())?;
    match format {
        CorpusFormat::Csv => read_csv(file),
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file)),
    }
}

/// Accumulates records while enforcing corpus invariants with file line numbers.
struct Builder {
    documents: Vec<RawComment>,
    ids: HashSet<String>,
}

impl Builder {
    fn new() -> Self {
        Self { documents: Vec::new(), ids: HashSet::new() }
    }

    fn push(
        &mut self,
        line: usize,
        id: Option<String>,
        text: String,
        sentiment: &str,
        emotion: Option<String>,
    ) -> Result<(), CorpusError> {
        let sentiment =
            sentiment.parse::<Sentiment>().map_err(|_| CorpusError::BadLabel { line, value: sentiment.to_string() })?;
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { line });
        }
        let id = match id {
            Some(id) if !id.trim().is_empty() => id,
            _ => format!("row-{line}"),
        };
        if !self.ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { line, id });
        }
        let emotion = emotion.filter(|e| !e.trim().is_empty());
        self.documents.push(RawComment { id, text, sentiment, emotion });
        Ok(())
    }

    fn finish(self) -> LabeledCorpus {
        LabeledCorpus::from_validated(self.documents)
    }
}

/// Parses RFC 4180 CSV with a header row. Line numbers are physical file
/// lines, so the first data row of a simple file is line 2.
pub fn read_csv<R: Read>(reader: R) -> Result<LabeledCorpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CorpusError::Malformed { line: 1, message: e.to_string() })?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let text_col = column("text").ok_or_else(|| CorpusError::MissingColumn { column: "text".into(), line: None })?;
    let sentiment_col =
        column("sentiment").ok_or_else(|| CorpusError::MissingColumn { column: "sentiment".into(), line: None })?;
    let id_col = column("id");
    let emotion_col = column("emotion");

    let mut builder = Builder::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            CorpusError::Malformed { line, message: e.to_string() }
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: usize| record.get(col).map(str::to_string);
        builder.push(
            line,
            id_col.and_then(field),
            field(text_col).unwrap_or_default(),
            record.get(sentiment_col).unwrap_or(""),
            emotion_col.and_then(field),
        )?;
    }
    Ok(builder.finish())
}

/// Parses one JSON object per line. Blank lines are skipped but still counted.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<LabeledCorpus, CorpusError> {
    let mut builder = Builder::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed { line: line_no, message };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| malformed("expected a JSON object".into()))?;

        let string_field = |key: &str| -> Result<Option<String>, CorpusError> {
            match obj.get(key) {
                None | Some(serde_json::Value::Null) => Ok(None),
                Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
                Some(serde_json::Value::Number(n)) if key == "id" => Ok(Some(n.to_string())),
                Some(other) => Err(malformed(format!("field `{key}` must be a string, got {other}"))),
            }
        };
        let text = string_field("text")?
            .ok_or_else(|| CorpusError::MissingColumn { column: "text".into(), line: Some(line_no) })?;
        let sentiment = string_field("sentiment")?
            .ok_or_else(|| CorpusError::MissingColumn { column: "sentiment".into(), line: Some(line_no) })?;
        builder.push(line_no, string_field("id")?, text, &sentiment, string_field("emotion")?)?;
    }
    Ok(builder.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelShare {
    pub count: usize,
    pub fraction: f64,
}

/// Count and fraction for each label present in the corpus.
pub fn label_distribution(corpus: &LabeledCorpus) -> Result<BTreeMap<Sentiment, LabelShare>, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let total = corpus.len() as f64;
    Ok(corpus
        .label_counts()
        .iter()
        .map(|(&label, &count)| (label, LabelShare { count, fraction: count as f64 / total }))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { test_fraction: 0.2, seed: 0, stratified: true }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CorpusError::InvalidSplitSpec(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Number of documents of a class with `count` members that go to the test side.
pub fn stratified_test_count(count: usize, test_fraction: f64) -> usize {
    if count < 2 {
        0
    } else {
        ((count as f64 * test_fraction).round() as usize).max(1)
    }
}

/// Seeded train/test partition. Both sides keep the corpus order.
///
/// Stratified: classes are visited in label order; each class's document
/// positions are shuffled with one shared generator and the first
/// [`stratified_test_count`] of them go to test. Unstratified: all positions
/// are shuffled once and the first `round(n * test_fraction)` go to test.
pub fn split(corpus: &LabeledCorpus, spec: &SplitSpec) -> Result<(LabeledCorpus, LabeledCorpus), CorpusError> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if corpus.len() < 2 {
        return Err(CorpusError::DegenerateSplit("need at least 2 documents".into()));
    }

    let mut rng = PortableRng::new(spec.seed);
    let mut in_test = vec![false; corpus.len()];
    if spec.stratified {
        for label in Sentiment::ALL {
            let mut members: Vec<usize> =
                corpus.documents.iter().enumerate().filter(|(_, d)| d.sentiment == label).map(|(i, _)| i).collect();
            if members.is_empty() {
                continue;
            }
            rng.shuffle(&mut members);
            let take = stratified_test_count(members.len(), spec.test_fraction);
            for &i in &members[..take] {
                in_test[i] = true;
            }
        }
    } else {
        let mut members: Vec<usize> = (0..corpus.len()).collect();
        rng.shuffle(&mut members);
        let take = (corpus.len() as f64 * spec.test_fraction).round() as usize;
        for &i in &members[..take.min(corpus.len())] {
            in_test[i] = true;
        }
    }

    let (test, train): (Vec<_>, Vec<_>) = corpus.documents.iter().cloned().zip(in_test).partition(|(_, t)| *t);
    if test.is_empty() || train.is_empty() {
        return Err(CorpusError::DegenerateSplit(format!(
            "train would have {} and test {} documents",
            train.len(),
            test.len()
        )));
    }
    let unzip =
        |side: Vec<(RawComment, bool)>| LabeledCorpus::from_validated(side.into_iter().map(|(d, _)| d).collect());
    Ok((unzip(train), unzip(test)))
}

/// Random oversampling with replacement up to the majority class count.
///
/// Duplicates are appended after the originals, class by class in label
/// order, with ids `<source id>-dup<N>` where N counts duplicates of that
/// source (skipping any id already taken).
pub fn oversample(corpus: &LabeledCorpus, seed: u64) -> Result<LabeledCorpus, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let majority = corpus.label_counts.values().copied().max().unwrap_or(0);
    let mut rng = PortableRng::new(seed);
    let mut documents = corpus.documents.clone();
    let mut ids: HashSet<String> = documents.iter().map(|d| d.id.clone()).collect();
    let mut dup_counter: BTreeMap<usize, usize> = BTreeMap::new();

    for (&label, &count) in &corpus.label_counts {
        if count >= majority {
            continue;
        }
        let members: Vec<usize> =
            corpus.documents.iter().enumerate().filter(|(_, d)| d.sentiment == label).map(|(i, _)| i).collect();
        for _ in count..majority {
            let source = members[rng.below(members.len())];
            let counter = dup_counter.entry(source).or_insert(0);
            let id = loop {
                *counter += 1;
                let candidate = format!("{}-dup{}", corpus.documents[source].id, counter);
                if !ids.contains(&candidate) {
                    break candidate;
                }
            };
            ids.insert(id.clone());
            documents.push(RawComment { id, ..corpus.documents[source].clone() });
        }
    }
    Ok(LabeledCorpus::from_validated(documents))
}
