//! Preprocessing, TF-IDF and boosted trees bundled into one trainable,
//! persistable unit.
//!
//! A saved model is a single JSON document with top-level keys
//! `format_version`, `class_names`, `preprocess`, `tfidf` and `gbdt`, so the
//! file alone reproduces the preprocessing used at training time.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{LabeledCorpus, Sentiment};
use crate::features::{FeatureConfig, FeatureError, TfIdfModel};
use crate::gbdt::{self, argmax, GbdtError, GbdtModel, TrainConfig};
use crate::preprocess::{preprocess_document, PreprocessConfig, PreprocessError};
use crate::Scalar;

pub const PIPELINE_FORMAT_VERSION: &str = "sentiscope-1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error("model format version {found:?} is not supported (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },
    #[error("corrupt model file: {0}")]
    CorruptPayload(String),
    #[error("i/o error: {0}")]
    IoFailure(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PipelineModel<T: Scalar> {
    format_version: String,
    class_names: Vec<String>,
    preprocess: PreprocessConfig,
    tfidf: TfIdfModel<T>,
    gbdt: GbdtModel<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub n_train_docs: usize,
    pub vocabulary_size: usize,
    pub initial_loss: f64,
    /// Mean training log-loss after each boosting round.
    pub round_losses: Vec<f64>,
    /// Not serialized, so that logs are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction<T> {
    pub label: Sentiment,
    /// Indexed like [`PipelineModel::class_names`].
    pub probabilities: Vec<T>,
}

/// Preprocesses `train`, fits TF-IDF on it and boosts one tree per
/// sentiment class per round.
pub fn train_pipeline<T: Scalar>(
    train: &LabeledCorpus,
    preprocess_config: &PreprocessConfig,
    feature_config: &FeatureConfig,
    train_config: &TrainConfig,
) -> Result<(PipelineModel<T>, TrainLog), PipelineError> {
    let started = Instant::now();
    preprocess_config.validate()?;
    feature_config.validate()?;
    train_config.validate()?;

    let tokens: Vec<Vec<String>> =
        train.documents().iter().map(|d| preprocess_document(&d.text, preprocess_config)).collect();
    let (tfidf, vectors) = TfIdfModel::<T>::fit_transform(&tokens, feature_config)?;
    let labels: Vec<usize> = train.documents().iter().map(|d| d.sentiment.index()).collect();
    let (gbdt, boosting) = gbdt::train(&vectors, &labels, Sentiment::ALL.len(), tfidf.vocabulary_size(), train_config)?;

    let model = PipelineModel {
        format_version: PIPELINE_FORMAT_VERSION.to_string(),
        class_names: Sentiment::class_names(),
        preprocess: preprocess_config.clone(),
        tfidf,
        gbdt,
    };
    let log = TrainLog {
        n_train_docs: train.len(),
        vocabulary_size: model.tfidf.vocabulary_size(),
        initial_loss: boosting.initial_loss,
        round_losses: boosting.round_losses,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, log))
}

impl<T: Scalar> PipelineModel<T> {
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn preprocess_config(&self) -> &PreprocessConfig {
        &self.preprocess
    }

    pub fn tfidf(&self) -> &TfIdfModel<T> {
        &self.tfidf
    }

    pub fn gbdt(&self) -> &GbdtModel<T> {
        &self.gbdt
    }

    /// Total over any input: text with no known terms maps to the empty
    /// vector and gets the base-score probabilities.
    pub fn predict(&self, text: &str) -> Prediction<T> {
        let tokens = preprocess_document(text, &self.preprocess);
        let vector = self.tfidf.transform(&tokens);
        let probabilities = self.gbdt.predict_proba(&vector).expect("vector matches model dimension");
        let label = Sentiment::from_index(argmax(&probabilities)).expect("class count checked on construction");
        Prediction { label, probabilities }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.class_names != Sentiment::class_names() {
            return Err(PipelineError::CorruptPayload(format!(
                "class_names must be {:?}, got {:?}",
                Sentiment::class_names(),
                self.class_names
            )));
        }
        if self.gbdt.n_classes() != self.class_names.len() {
            return Err(PipelineError::CorruptPayload("gbdt class count differs from class_names".into()));
        }
        if self.gbdt.feature_dim() != self.tfidf.vocabulary_size() {
            return Err(PipelineError::CorruptPayload(format!(
                "gbdt feature dimension {} differs from vocabulary size {}",
                self.gbdt.feature_dim(),
                self.tfidf.vocabulary_size()
            )));
        }
        self.preprocess.validate()?;
        Ok(())
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("model serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        let value: Value = serde_json::from_slice(bytes).map_err(|e| PipelineError::CorruptPayload(e.to_string()))?;
        let Value::Object(mut map) = value else {
            return Err(PipelineError::CorruptPayload("top level is not an object".into()));
        };
        match map.get("format_version").and_then(Value::as_str) {
            Some(PIPELINE_FORMAT_VERSION) => {}
            Some(other) => {
                return Err(PipelineError::VersionMismatch {
                    found: other.into(),
                    expected: PIPELINE_FORMAT_VERSION.into(),
                })
            }
            None => return Err(PipelineError::CorruptPayload("missing format_version".into())),
        }
        let mut take =
            |key: &str| map.remove(key).ok_or_else(|| PipelineError::CorruptPayload(format!("missing {key} section")));
        let class_names = take("class_names")?;
        let preprocess = take("preprocess")?;
        let tfidf = take("tfidf")?;
        let gbdt = take("gbdt")?;
        let section = |name: &str, e: serde_json::Error| PipelineError::CorruptPayload(format!("{name}: {e}"));

        let gbdt = gbdt::model_from_value(gbdt).map_err(|e| match e {
            GbdtError::VersionMismatch { found, expected } => PipelineError::VersionMismatch { found, expected },
            other => PipelineError::CorruptPayload(format!("gbdt: {other}")),
        })?;
        let model = Self {
            format_version: PIPELINE_FORMAT_VERSION.to_string(),
            class_names: serde_json::from_value(class_names).map_err(|e| section("class_names", e))?,
            preprocess: serde_json::from_value(preprocess).map_err(|e| section("preprocess", e))?,
            tfidf: serde_json::from_value(tfidf).map_err(|e| section("tfidf", e))?,
            gbdt,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        fs::write(path, self.to_json_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json_bytes(&fs::read(path)?)
    }
}
