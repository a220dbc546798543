//! Confusion matrices and classification metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabeledCorpus, Sentiment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label `{0}` is not one of the class names")]
    UnknownLabel(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        Self { class_names, counts: vec![vec![0; k]; k] }
    }

    pub fn from_indices(true_idx: &[usize], pred_idx: &[usize], class_names: Vec<String>) -> Result<Self, EvalError> {
        if true_idx.len() != pred_idx.len() {
            return Err(EvalError::LengthMismatch { truth: true_idx.len(), predicted: pred_idx.len() });
        }
        let mut cm = Self::zeros(class_names);
        let k = cm.class_names.len();
        for (&t, &p) in true_idx.iter().zip(pred_idx) {
            if t >= k || p >= k {
                return Err(EvalError::UnknownLabel(t.max(p).to_string()));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    /// CSV with a header row and a leading column of class names.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix<S: AsRef<str>>(
    true_labels: &[S],
    predicted_labels: &[S],
    class_names: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    let lookup = |label: &S| {
        class_names
            .iter()
            .position(|c| c == label.as_ref())
            .ok_or_else(|| EvalError::UnknownLabel(label.as_ref().to_string()))
    };
    let truth = true_labels.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
    let pred = predicted_labels.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
    ConfusionMatrix::from_indices(&truth, &pred, class_names.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

/// `num / den`, or 0 when the denominator is 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let per_class: Vec<ClassMetrics> = cm
        .class_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let tp = cm.counts[i][i] as f64;
            let precision = ratio(tp, cm.col_sum(i) as f64);
            let recall = ratio(tp, cm.row_sum(i) as f64);
            let f1 = ratio(2.0 * precision * recall, precision + recall);
            ClassMetrics { class: name.clone(), precision, recall, f1, support: cm.row_sum(i) }
        })
        .collect();
    let k = per_class.len().max(1) as f64;
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / k;
    let weighted_f1 = per_class.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total as f64;
    Ok(MetricsReport { accuracy: cm.trace() as f64 / total as f64, per_class, macro_f1, weighted_f1 })
}

/// Most frequent training label; ties go to the lexicographically smallest name.
pub fn majority_label(train: &LabeledCorpus) -> Option<Sentiment> {
    let mut best: Option<(Sentiment, usize)> = None;
    for (&label, &count) in train.label_counts() {
        let better = match best {
            None => true,
            Some((b, c)) => count > c || (count == c && label.as_str() < b.as_str()),
        };
        if better {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l)
}

/// Metrics of the constant predictor that always answers the training majority.
pub fn majority_baseline(train: &LabeledCorpus, test: &LabeledCorpus) -> Result<MetricsReport, EvalError> {
    let majority = majority_label(train).ok_or(EvalError::EmptyCorpus)?;
    if test.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let truth: Vec<usize> = test.documents().iter().map(|d| d.sentiment.index()).collect();
    let pred = vec![majority.index(); truth.len()];
    compute_metrics(&ConfusionMatrix::from_indices(&truth, &pred, Sentiment::class_names())?)
}
