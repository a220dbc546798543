//! Exploratory statistics: label and emotion distributions, text lengths,
//! frequent n-grams and word-frequency tables.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{label_distribution, LabelShare, LabeledCorpus, RawComment, Sentiment};
use crate::preprocess::{preprocess_document, PreprocessConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EdaError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be 1 or 2, got {0}")]
    BadN(usize),
    #[error("no document carries an emotion label")]
    NoEmotionLabels,
}

/// Five-number summary plus mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile with midpoint interpolation: at position `p = q * (n - 1)` of the
/// sorted data, the mean of the values at `floor(p)` and `ceil(p)`.
pub fn midpoint_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    (sorted[pos.floor() as usize] + sorted[pos.ceil() as usize]) / 2.0
}

impl Summary {
    /// `values` must be non-empty.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            count: sorted.len(),
            mean,
            std: var.sqrt(),
            min: sorted[0],
            q1: midpoint_quantile(&sorted, 0.25),
            median: midpoint_quantile(&sorted, 0.5),
            q3: midpoint_quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub count: usize,
    /// Unicode scalar count of the raw text.
    pub chars: Summary,
    /// Token count after full preprocessing.
    pub tokens: Summary,
}

pub type LengthStats = BTreeMap<Sentiment, LengthSummary>;

pub fn length_stats(corpus: &LabeledCorpus, config: &PreprocessConfig) -> Result<LengthStats, EdaError> {
    if corpus.is_empty() {
        return Err(EdaError::EmptyCorpus);
    }
    let mut by_label: BTreeMap<Sentiment, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for doc in corpus.documents() {
        let entry = by_label.entry(doc.sentiment).or_default();
        entry.0.push(doc.text.chars().count() as f64);
        entry.1.push(preprocess_document(&doc.text, config).len() as f64);
    }
    Ok(by_label
        .into_iter()
        .map(|(label, (chars, tokens))| {
            (label, LengthSummary { count: chars.len(), chars: Summary::of(&chars), tokens: Summary::of(&tokens) })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRow {
    pub ngram: String,
    pub count: u64,
}

/// Rows sorted by count descending, then n-gram ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramTable {
    pub n: usize,
    pub scope: String,
    pub rows: Vec<NgramRow>,
}

impl NgramTable {
    fn from_counts(n: usize, scope: String, counts: HashMap<String, u64>, k: Option<usize>) -> Self {
        let mut rows: Vec<NgramRow> = counts.into_iter().map(|(ngram, count)| NgramRow { ngram, count }).collect();
        rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.ngram.cmp(&b.ngram)));
        if let Some(k) = k {
            rows.truncate(k);
        }
        Self { n, scope, rows }
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }
}

/// Space-joined n-grams over adjacent tokens of a single document.
fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = String> + '_ {
    tokens.windows(n).map(|w| w.join(" "))
}

fn count_ngrams<'a>(
    docs: impl Iterator<Item = &'a RawComment>,
    config: &PreprocessConfig,
    n: usize,
) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for doc in docs {
        let tokens = preprocess_document(&doc.text, config);
        for gram in ngrams(&tokens, n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub const OVERALL_SCOPE: &str = "overall";

/// Top-`k` n-grams, either one overall table or one table per sentiment
/// present in the corpus.
pub fn top_ngrams(
    corpus: &LabeledCorpus,
    config: &PreprocessConfig,
    n: usize,
    k: usize,
    per_sentiment: bool,
) -> Result<Vec<NgramTable>, EdaError> {
    if !(1..=2).contains(&n) {
        return Err(EdaError::BadN(n));
    }
    if corpus.is_empty() {
        return Err(EdaError::EmptyCorpus);
    }
    if !per_sentiment {
        let counts = count_ngrams(corpus.documents().iter(), config, n);
        return Ok(vec![NgramTable::from_counts(n, OVERALL_SCOPE.into(), counts, Some(k))]);
    }
    Ok(corpus
        .label_counts()
        .keys()
        .map(|&label| {
            let docs = corpus.documents().iter().filter(move |d| d.sentiment == label);
            NgramTable::from_counts(n, label.to_string(), count_ngrams(docs, config, n), Some(k))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyScope {
    Overall,
    PerSentiment,
    PerEmotion,
}

/// Complete unigram counts for word-cloud rendering. Per-emotion scope only
/// covers documents that carry an emotion.
pub fn export_word_frequencies(
    corpus: &LabeledCorpus,
    config: &PreprocessConfig,
    scope: FrequencyScope,
) -> Result<Vec<NgramTable>, EdaError> {
    if corpus.is_empty() {
        return Err(EdaError::EmptyCorpus);
    }
    let docs = corpus.documents();
    let table = |name: String, selected: Vec<&RawComment>| {
        NgramTable::from_counts(1, name, count_ngrams(selected.into_iter(), config, 1), None)
    };
    Ok(match scope {
        FrequencyScope::Overall => vec![table(OVERALL_SCOPE.into(), docs.iter().collect())],
        FrequencyScope::PerSentiment => corpus
            .label_counts()
            .keys()
            .map(|&label| table(label.to_string(), docs.iter().filter(|d| d.sentiment == label).collect()))
            .collect(),
        FrequencyScope::PerEmotion => {
            let mut groups: BTreeMap<&str, Vec<&RawComment>> = BTreeMap::new();
            for doc in docs {
                if let Some(emotion) = &doc.emotion {
                    groups.entry(emotion.as_str()).or_default().push(doc);
                }
            }
            if groups.is_empty() {
                return Err(EdaError::NoEmotionLabels);
            }
            groups.into_iter().map(|(emotion, selected)| table(emotion.to_string(), selected)).collect()
        }
    })
}

/// Tables flattened to CSV with columns scope, ngram, count.
pub fn tables_to_csv(tables: &[NgramTable]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["scope", "ngram", "count"]).expect("in-memory write");
    for table in tables {
        for row in &table.rows {
            writer
                .write_record([table.scope.as_str(), row.ngram.as_str(), &row.count.to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosstabCell {
    pub emotion: String,
    pub sentiment: Sentiment,
    pub count: usize,
}

/// Counts of (emotion, sentiment) pairs over emotion-labelled documents.
pub fn emotion_sentiment_crosstab(corpus: &LabeledCorpus) -> Result<Vec<CrosstabCell>, EdaError> {
    let mut cells: BTreeMap<(&str, Sentiment), usize> = BTreeMap::new();
    for doc in corpus.documents() {
        if let Some(emotion) = &doc.emotion {
            *cells.entry((emotion.as_str(), doc.sentiment)).or_insert(0) += 1;
        }
    }
    if cells.is_empty() {
        return Err(EdaError::NoEmotionLabels);
    }
    Ok(cells
        .into_iter()
        .map(|((emotion, sentiment), count)| CrosstabCell { emotion: emotion.to_string(), sentiment, count })
        .collect())
}

/// Share of each emotion among emotion-labelled documents.
pub fn emotion_distribution(corpus: &LabeledCorpus) -> Result<BTreeMap<String, LabelShare>, EdaError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for emotion in corpus.documents().iter().filter_map(|d| d.emotion.as_ref()) {
        *counts.entry(emotion.clone()).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(EdaError::NoEmotionLabels);
    }
    Ok(counts.into_iter().map(|(e, count)| (e, LabelShare { count, fraction: count as f64 / total as f64 })).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub n_documents: usize,
    pub label_distribution: BTreeMap<Sentiment, LabelShare>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emotion_distribution: Option<BTreeMap<String, LabelShare>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emotion_sentiment_crosstab: Option<Vec<CrosstabCell>>,
    pub length_stats: LengthStats,
    /// Overall then per-sentiment tables, unigrams before bigrams.
    pub ngram_tables: Vec<NgramTable>,
    /// Full overall, per-sentiment and (when available) per-emotion counts.
    pub word_frequencies: Vec<NgramTable>,
}

/// Builds every section; emotion sections are omitted when no document
/// carries an emotion label.
pub fn build_report(corpus: &LabeledCorpus, config: &PreprocessConfig, top_k: usize) -> Result<EdaReport, EdaError> {
    let label_distribution = label_distribution(corpus).map_err(|_| EdaError::EmptyCorpus)?;
    let mut ngram_tables = Vec::new();
    for n in [1, 2] {
        ngram_tables.extend(top_ngrams(corpus, config, n, top_k, false)?);
        ngram_tables.extend(top_ngrams(corpus, config, n, top_k, true)?);
    }
    let mut word_frequencies = export_word_frequencies(corpus, config, FrequencyScope::Overall)?;
    word_frequencies.extend(export_word_frequencies(corpus, config, FrequencyScope::PerSentiment)?);
    let has_emotions = corpus.documents().iter().any(|d| d.emotion.is_some());
    if has_emotions {
        word_frequencies.extend(export_word_frequencies(corpus, config, FrequencyScope::PerEmotion)?);
    }
    Ok(EdaReport {
        n_documents: corpus.len(),
        label_distribution,
        emotion_distribution: has_emotions.then(|| emotion_distribution(corpus)).transpose()?,
        emotion_sentiment_crosstab: has_emotions.then(|| emotion_sentiment_crosstab(corpus)).transpose()?,
        length_stats: length_stats(corpus, config)?,
        ngram_tables,
        word_frequencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sentiment::{Negative as Neg, Neutral as Neu, Positive as Pos};

    fn corpus(docs: &[(&str, Sentiment, Option<&str>)]) -> LabeledCorpus {
        LabeledCorpus::new(
            docs.iter()
                .enumerate()
                .map(|(i, &(text, s, e))| {
                    let c = RawComment::new(format!("d{i}"), text, s);
                    match e {
                        Some(e) => c.with_emotion(e),
                        None => c,
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn plain() -> PreprocessConfig {
        PreprocessConfig { stopwords: Default::default(), enable_stemming: false, ..PreprocessConfig::default() }
    }

    #[test]
    fn quantiles_use_midpoint_rule() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((s.q1, s.median, s.q3), (1.5, 2.5, 3.5));
        assert_eq!((s.min, s.max, s.mean), (1.0, 4.0, 2.5));
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_document_lengths() {
        let stats = length_stats(&corpus(&[("ab cd", Neg, None)]), &plain()).unwrap();
        let s = &stats[&Neg];
        assert_eq!(s.count, 1);
        assert_eq!(s.chars.median, 5.0);
        assert_eq!(s.tokens.median, 2.0);
        assert_eq!((s.chars.min, s.chars.q1, s.chars.q3, s.chars.max), (5.0, 5.0, 5.0, 5.0));
    }

    #[test]
    fn length_counts_partition_corpus() {
        let c = corpus(&[("satu dua", Neg, None), ("tiga", Neg, None), ("empat lima enam", Pos, None)]);
        let stats = length_stats(&c, &plain()).unwrap();
        assert_eq!(stats.values().map(|s| s.count).sum::<usize>(), 3);
        assert!(length_stats(&corpus(&[]), &plain()).is_err());
    }

    #[test]
    fn bigram_counts() {
        let c = corpus(&[("antek asing", Neg, None), ("antek asing kuasai", Neg, None)]);
        let tables = top_ngrams(&c, &plain(), 2, 10, false).unwrap();
        assert_eq!(tables[0].rows[0], NgramRow { ngram: "antek asing".into(), count: 2 });
        assert_eq!(tables[0].rows.len(), 2);
        let single = corpus(&[("halo", Neu, None)]);
        assert!(top_ngrams(&single, &plain(), 2, 5, false).unwrap()[0].rows.is_empty());
        assert_eq!(top_ngrams(&single, &plain(), 3, 5, false).unwrap_err(), EdaError::BadN(3));
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = corpus(&[("zeta alpha mid", Neg, None)]);
        let table = &top_ngrams(&c, &plain(), 1, 1, false).unwrap()[0];
        assert_eq!(table.rows, vec![NgramRow { ngram: "alpha".into(), count: 1 }]);
    }

    #[test]
    fn crosstab_cells() {
        let c = corpus(&[("a b", Neg, Some("Kecewa")), ("c d", Neg, Some("Kecewa")), ("e f", Pos, Some("Senang"))]);
        let cells = emotion_sentiment_crosstab(&c).unwrap();
        assert_eq!(
            cells,
            vec![
                CrosstabCell { emotion: "Kecewa".into(), sentiment: Neg, count: 2 },
                CrosstabCell { emotion: "Senang".into(), sentiment: Pos, count: 1 },
            ]
        );
        let none = corpus(&[("a b", Neg, None)]);
        assert_eq!(emotion_sentiment_crosstab(&none).unwrap_err(), EdaError::NoEmotionLabels);
    }

    #[test]
    fn word_frequencies_overall_and_partitions() {
        let c = corpus(&[("asing antek", Neg, None), ("asing", Pos, None)]);
        let overall = export_word_frequencies(&c, &plain(), FrequencyScope::Overall).unwrap();
        assert_eq!(
            overall[0].rows,
            vec![NgramRow { ngram: "asing".into(), count: 2 }, NgramRow { ngram: "antek".into(), count: 1 }]
        );
        let per = export_word_frequencies(&c, &plain(), FrequencyScope::PerSentiment).unwrap();
        assert_eq!(per.iter().map(NgramTable::total).sum::<u64>(), overall[0].total());
        assert_eq!(
            export_word_frequencies(&corpus(&[]), &plain(), FrequencyScope::Overall).unwrap_err(),
            EdaError::EmptyCorpus
        );
        assert_eq!(
            export_word_frequencies(&c, &plain(), FrequencyScope::PerEmotion).unwrap_err(),
            EdaError::NoEmotionLabels
        );
    }

    #[test]
    fn unigram_table_equals_word_frequencies() {
        let c = corpus(&[("barang bagus sekali", Pos, None), ("barang jelek", Neg, None), ("jelek", Neg, None)]);
        let cfg = PreprocessConfig::default();
        let unigrams = top_ngrams(&c, &cfg, 1, usize::MAX, false).unwrap();
        let freqs = export_word_frequencies(&c, &cfg, FrequencyScope::Overall).unwrap();
        assert_eq!(unigrams, freqs);
    }

    #[test]
    fn csv_layout() {
        let c = corpus(&[("asing antek", Neg, None)]);
        let tables = export_word_frequencies(&c, &plain(), FrequencyScope::Overall).unwrap();
        assert_eq!(tables_to_csv(&tables), "scope,ngram,count\noverall,antek,1\noverall,asing,1\n");
    }

    #[test]
    fn report_sections() {
        let c = corpus(&[("asing antek", Neg, Some("Marah/Benci")), ("terima kasih", Pos, None)]);
        let report = build_report(&c, &plain(), 5).unwrap();
        assert_eq!(report.emotion_sentiment_crosstab.as_ref().unwrap().len(), 1);
        assert_eq!(report.ngram_tables.len(), 6);
        let plain_corpus = corpus(&[("asing antek", Neg, None)]);
        let report = build_report(&plain_corpus, &plain(), 5).unwrap();
        assert!(report.emotion_sentiment_crosstab.is_none());
        let json = serde_json::to_value(&report).unwrap();
        assert!(json.get("emotion_sentiment_crosstab").is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lengths_permutation_invariant(texts in proptest::collection::vec("[a-z ]{1,30}", 1..10), seed in any::<u64>()) {
                let texts: Vec<String> = texts.into_iter().filter(|t| !t.trim().is_empty()).collect();
                prop_assume!(!texts.is_empty());
                let docs: Vec<(&str, Sentiment, Option<&str>)> = texts.iter().enumerate()
                    .map(|(i, t)| (t.as_str(), Sentiment::ALL[i % 3], None)).collect();
                let mut shuffled = docs.clone();
                crate::rng::PortableRng::new(seed).shuffle(&mut shuffled);
                prop_assert_eq!(length_stats(&corpus(&docs), &plain()).unwrap(), length_stats(&corpus(&shuffled), &plain()).unwrap());
            }

            #[test]
            fn per_sentiment_bigram_totals(texts in proptest::collection::vec("[a-c ]{1,20}", 1..10)) {
                let texts: Vec<String> = texts.into_iter().filter(|t| !t.trim().is_empty()).collect();
                prop_assume!(!texts.is_empty());
                let docs: Vec<(&str, Sentiment, Option<&str>)> = texts.iter().enumerate()
                    .map(|(i, t)| (t.as_str(), Sentiment::ALL[i % 3], None)).collect();
                let c = corpus(&docs);
                let cfg = plain();
                for table in top_ngrams(&c, &cfg, 2, usize::MAX, true).unwrap() {
                    let expected: usize = c.documents().iter()
                        .filter(|d| d.sentiment.as_str() == table.scope)
                        .map(|d| preprocess_document(&d.text, &cfg).len().saturating_sub(1))
                        .sum();
                    prop_assert_eq!(table.total() as usize, expected);
                }
            }
        }
    }
}
