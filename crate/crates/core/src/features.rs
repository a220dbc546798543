//! TF-IDF vectorization into L2-normalised sparse vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("no training documents")]
    EmptyCorpus,
    #[error("no term reaches min_df = {min_df}")]
    EmptyVocabulary { min_df: usize },
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("corrupt tf-idf model: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub min_df: usize,
    pub max_features: Option<usize>,
    pub sublinear_tf: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { min_df: 2, max_features: Some(5000), sublinear_tf: false }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.min_df == 0 {
            return Err(FeatureError::InvalidConfig("min_df must be at least 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(FeatureError::InvalidConfig("max_features must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sparse vector with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    /// Builds from arbitrary pairs: sorts by index and drops zeros.
    /// Duplicate indices are summed.
    pub fn from_pairs(mut pairs: Vec<(usize, T)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, T)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc = *acc + v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != T::zero());
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.entries.binary_search_by_key(&index, |&(i, _)| i).ok().map(|pos| self.entries[pos].1)
    }

    pub fn norm(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, &(_, v)| acc + v * v).sqrt()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TfIdfRepr<T>", try_from = "TfIdfRepr<T>", bound = "")]
pub struct TfIdfModel<T: Scalar> {
    /// Terms in column order, which is ascending lexicographic order.
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    idf: Vec<T>,
    n_train_docs: usize,
    config: FeatureConfig,
}

/// On-disk layout: sorted term array with parallel df and idf arrays.
#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct TfIdfRepr<T: Scalar> {
    vocabulary: Vec<String>,
    document_frequency: Vec<usize>,
    idf: Vec<T>,
    n_train_docs: usize,
    config: FeatureConfig,
}

impl<T: Scalar> From<TfIdfModel<T>> for TfIdfRepr<T> {
    fn from(m: TfIdfModel<T>) -> Self {
        Self {
            vocabulary: m.terms,
            document_frequency: m.document_frequency,
            idf: m.idf,
            n_train_docs: m.n_train_docs,
            config: m.config,
        }
    }
}

impl<T: Scalar> TryFrom<TfIdfRepr<T>> for TfIdfModel<T> {
    type Error = FeatureError;

    fn try_from(r: TfIdfRepr<T>) -> Result<Self, Self::Error> {
        let v = r.vocabulary.len();
        if r.idf.len() != v || r.document_frequency.len() != v {
            return Err(FeatureError::Corrupt("vocabulary, idf and df lengths differ".into()));
        }
        if r.vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeatureError::Corrupt("vocabulary is not strictly sorted".into()));
        }
        if r.idf.iter().any(|x| !x.is_finite() || *x <= T::zero()) {
            return Err(FeatureError::Corrupt("idf values must be finite and positive".into()));
        }
        r.config.validate()?;
        let index = r.vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self {
            terms: r.vocabulary,
            index,
            document_frequency: r.document_frequency,
            idf: r.idf,
            n_train_docs: r.n_train_docs,
            config: r.config,
        })
    }
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf<T: Scalar>(n_docs: usize, df: usize) -> T {
    let ratio = T::of((1 + n_docs) as f64) / T::of((1 + df) as f64);
    ratio.ln() + T::one()
}

impl<T: Scalar> TfIdfModel<T> {
    pub fn fit<S: AsRef<str>>(train_docs: &[Vec<S>], config: &FeatureConfig) -> Result<Self, FeatureError> {
        config.validate()?;
        if train_docs.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in train_docs {
            let unique: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for term in unique {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c >= config.min_df).collect();
        if kept.is_empty() {
            return Err(FeatureError::EmptyVocabulary { min_df: config.min_df });
        }
        if let Some(cap) = config.max_features {
            if kept.len() > cap {
                kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
                kept.truncate(cap);
                kept.sort_by(|a, b| a.0.cmp(b.0));
            }
        }

        let n = train_docs.len();
        let terms: Vec<String> = kept.iter().map(|&(t, _)| t.to_string()).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self {
            terms,
            index,
            document_frequency: kept.iter().map(|&(_, c)| c).collect(),
            idf: kept.iter().map(|&(_, c)| smoothed_idf(n, c)).collect(),
            n_train_docs: n,
            config: config.clone(),
        })
    }

    /// Term counts times idf, L2-normalised. Out-of-vocabulary tokens are ignored.
    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector<T> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for token in doc {
            if let Some(&col) = self.index.get(token.as_ref()) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, T)> = counts
            .into_iter()
            .map(|(col, count)| {
                let count = T::of(count as f64);
                let tf = if self.config.sublinear_tf { T::one() + count.ln() } else { count };
                (col, tf * self.idf[col])
            })
            .collect();
        let norm = entries.iter().fold(T::zero(), |acc, &(_, v)| acc + v * v).sqrt();
        if norm > T::zero() {
            for (_, v) in &mut entries {
                *v = *v / norm;
            }
        }
        entries.retain(|&(_, v)| v != T::zero());
        SparseVector { entries }
    }

    pub fn fit_transform<S: AsRef<str>>(
        train_docs: &[Vec<S>],
        config: &FeatureConfig,
    ) -> Result<(Self, Vec<SparseVector<T>>), FeatureError> {
        let model = Self::fit(train_docs, config)?;
        let vectors = train_docs.iter().map(|d| model.transform(d)).collect();
        Ok((model, vectors))
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self) -> &[T] {
        &self.idf
    }

    pub fn document_frequency(&self) -> &[usize] {
        &self.document_frequency
    }

    pub fn n_train_docs(&self) -> usize {
        self.n_train_docs
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }
}
