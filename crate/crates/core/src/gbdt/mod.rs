//! Multiclass gradient-boosted decision trees.
//!
//! Each boosting round fits one regression tree per class to the first and
//! second derivatives of the softmax cross-entropy at the current margins,
//! minimising the regularised second-order objective
//!
//! ```text
//! L(t) = sum_i l(y_i, yhat_i(t-1) + f_t(x_i)) + gamma * T + lambda/2 * ||w||^2
//! ```
//!
//! where `T` is the leaf count of `f_t` and `w` its leaf weights. Splits are
//! found by exact greedy enumeration with a learned default direction for
//! absent sparse entries.

mod objective;
mod split;
mod tree;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::SparseVector;
use crate::Scalar;

pub use objective::{cross_entropy, grad_hess_softmax, leaf_weight, softmax, split_gain, GradHess, HESSIAN_FLOOR};
pub use split::{find_best_split, midpoint_threshold, FeatureMatrix, SplitInfo};
pub use tree::{build_tree, TreeNode};

/// Version tag written into serialized models.
pub const GBDT_FORMAT_VERSION: &str = "gbdt-1";

/// Deepest tree the model format accepts; bounded by JSON nesting limits.
pub const MAX_TREE_DEPTH: usize = 64;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training labels contain fewer than two distinct classes")]
    SingleClassTraining,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label {label} is outside 0..{n_classes}")]
    InvalidLabel { label: usize, n_classes: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("leaf has zero hessian sum and zero lambda")]
    DegenerateLeaf,
    #[error("model format version `{found}` is not supported (expected `{expected}`)")]
    VersionMismatch { found: String, expected: String },
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    None,
    /// Instance weight `N / (K * N_c)` for class `c`, with `K` the number of
    /// classes present in the training labels.
    Balanced,
}

impl std::str::FromStr for ClassWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(ClassWeighting::None),
            "balanced" => Ok(ClassWeighting::Balanced),
            other => Err(format!("unknown class weighting `{other}` (expected none or balanced)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub class_weighting: ClassWeighting,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            class_weighting: ClassWeighting::None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |msg: String| Err(GbdtError::InvalidConfig(msg));
        if self.n_rounds == 0 {
            return bad("n_rounds must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must lie in (0, 1], got {}", self.learning_rate));
        }
        if self.max_depth == 0 || self.max_depth > MAX_TREE_DEPTH {
            return bad(format!("max_depth must lie in 1..={MAX_TREE_DEPTH}, got {}", self.max_depth));
        }
        for (name, value) in
            [("lambda", self.lambda), ("gamma", self.gamma), ("min_child_weight", self.min_child_weight)]
        {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {value}"));
            }
        }
        Ok(())
    }
}

/// Per-round training loss (mean multiclass log-loss, unweighted).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoostingLog {
    pub initial_loss: f64,
    pub round_losses: Vec<f64>,
    /// Whether any tree contained at least one split.
    pub any_split: bool,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GbdtModel<T> {
    format_version: String,
    n_classes: usize,
    feature_dim: usize,
    base_score: Vec<T>,
    /// `rounds[r][k]` is the tree for class `k` added in round `r`.
    rounds: Vec<Vec<TreeNode<T>>>,
    config: TrainConfig,
}

fn mean_log_loss<T: Scalar>(margins: &[Vec<T>], labels: &[usize]) -> f64 {
    let total: f64 = margins.iter().zip(labels).map(|(m, &y)| cross_entropy(m, y).to_f64_lossy()).sum();
    total / labels.len() as f64
}

/// Trains `config.n_rounds` rounds of `n_classes` trees each.
pub fn train<T: Scalar>(
    vectors: &[SparseVector<T>],
    labels: &[usize],
    n_classes: usize,
    feature_dim: usize,
    config: &TrainConfig,
) -> Result<(GbdtModel<T>, BoostingLog), GbdtError> {
    let started = Instant::now();
    config.validate()?;
    if vectors.is_empty() {
        return Err(GbdtError::EmptyTrainingSet);
    }
    if vectors.len() != labels.len() {
        return Err(GbdtError::DimensionMismatch(format!("{} vectors but {} labels", vectors.len(), labels.len())));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(GbdtError::InvalidLabel { label, n_classes });
    }
    let mut class_counts = vec![0usize; n_classes];
    for &l in labels {
        class_counts[l] += 1;
    }
    let present = class_counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(GbdtError::SingleClassTraining);
    }
    let features = FeatureMatrix::new(vectors, feature_dim)?;

    let n = vectors.len();
    let weights: Vec<T> = match config.class_weighting {
        ClassWeighting::None => vec![T::one(); n],
        ClassWeighting::Balanced => {
            labels.iter().map(|&l| T::of(n as f64 / (present as f64 * class_counts[l] as f64))).collect()
        }
    };

    let base_score = vec![T::zero(); n_classes];
    let mut margins: Vec<Vec<T>> = vec![base_score.clone(); n];
    let mut log = BoostingLog { initial_loss: mean_log_loss(&margins, labels), ..BoostingLog::default() };
    let instances: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::with_capacity(config.n_rounds);
    let mut grad = vec![vec![T::zero(); n]; n_classes];
    let mut hess = vec![vec![T::zero(); n]; n_classes];

    for _ in 0..config.n_rounds {
        for i in 0..n {
            let probs = softmax(&margins[i]);
            for (k, gh) in grad_hess_softmax(&probs, labels[i], weights[i]).into_iter().enumerate() {
                grad[k][i] = gh.g;
                hess[k][i] = gh.h;
            }
        }
        let trees = (0..n_classes)
            .map(|k| build_tree(&instances, &features, &grad[k], &hess[k], config))
            .collect::<Result<Vec<_>, _>>()?;
        log.any_split |= trees.iter().any(|t| matches!(t, TreeNode::Split { .. }));
        for (i, m) in margins.iter_mut().enumerate() {
            for (k, tree) in trees.iter().enumerate() {
                m[k] = m[k] + tree.predict(&vectors[i]);
            }
        }
        log.round_losses.push(mean_log_loss(&margins, labels));
        rounds.push(trees);
    }
    log.wall_time_secs = started.elapsed().as_secs_f64();

    let model = GbdtModel {
        format_version: GBDT_FORMAT_VERSION.to_string(),
        n_classes,
        feature_dim,
        base_score,
        rounds,
        config: config.clone(),
    };
    Ok((model, log))
}

impl<T: Scalar> GbdtModel<T> {
    /// Assembles a model from explicit trees, validating shapes.
    pub fn from_parts(
        n_classes: usize,
        feature_dim: usize,
        base_score: Vec<T>,
        rounds: Vec<Vec<TreeNode<T>>>,
        config: TrainConfig,
    ) -> Result<Self, GbdtError> {
        let model = Self {
            format_version: GBDT_FORMAT_VERSION.to_string(),
            n_classes,
            feature_dim,
            base_score,
            rounds,
            config,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), GbdtError> {
        let corrupt = |msg: String| Err(GbdtError::CorruptPayload(msg));
        if self.format_version != GBDT_FORMAT_VERSION {
            return Err(GbdtError::VersionMismatch {
                found: self.format_version.clone(),
                expected: GBDT_FORMAT_VERSION.into(),
            });
        }
        if self.n_classes < 2 {
            return corrupt(format!("n_classes must be at least 2, got {}", self.n_classes));
        }
        if self.base_score.len() != self.n_classes || self.base_score.iter().any(|b| !b.is_finite()) {
            return corrupt("base_score must hold one finite value per class".into());
        }
        self.config.validate().map_err(|e| GbdtError::CorruptPayload(e.to_string()))?;
        if self.rounds.len() > self.config.n_rounds {
            return corrupt(format!("{} rounds exceed n_rounds = {}", self.rounds.len(), self.config.n_rounds));
        }
        for (r, round) in self.rounds.iter().enumerate() {
            if round.len() != self.n_classes {
                return corrupt(format!("round {r} holds {} trees, expected {}", round.len(), self.n_classes));
            }
            for tree in round {
                if tree.max_feature().is_some_and(|f| f >= self.feature_dim) {
                    return corrupt(format!("round {r}: split feature outside dimension {}", self.feature_dim));
                }
                if tree.depth() > self.config.max_depth || !tree.all_finite() {
                    return corrupt(format!("round {r}: tree too deep or non-finite"));
                }
            }
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn base_score(&self) -> &[T] {
        &self.base_score
    }

    pub fn rounds(&self) -> &[Vec<TreeNode<T>>] {
        &self.rounds
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    fn check_dim(&self, x: &SparseVector<T>) -> Result<(), GbdtError> {
        match x.max_index() {
            Some(i) if i >= self.feature_dim => {
                Err(GbdtError::DimensionMismatch(format!("column {i} outside feature dimension {}", self.feature_dim)))
            }
            _ => Ok(()),
        }
    }

    /// `base_score[k]` plus every class-`k` tree, summed in round order.
    pub fn predict_margin(&self, x: &SparseVector<T>) -> Result<Vec<T>, GbdtError> {
        self.check_dim(x)?;
        let mut margins = self.base_score.clone();
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                margins[k] = margins[k] + tree.predict(x);
            }
        }
        Ok(margins)
    }

    pub fn predict_proba(&self, x: &SparseVector<T>) -> Result<Vec<T>, GbdtError> {
        Ok(softmax(&self.predict_margin(x)?))
    }

    /// Index of the largest margin; ties go to the lowest index.
    pub fn predict_label(&self, x: &SparseVector<T>) -> Result<usize, GbdtError> {
        Ok(argmax(&self.predict_margin(x)?))
    }
}

pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

pub fn serialize_model<T: Scalar>(model: &GbdtModel<T>) -> Vec<u8> {
    serde_json::to_vec(model).expect("model serializes")
}

/// Checks `format_version` before decoding the rest, then validates shapes.
pub fn deserialize_model<T: Scalar>(bytes: &[u8]) -> Result<GbdtModel<T>, GbdtError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| GbdtError::CorruptPayload(e.to_string()))?;
    model_from_value(value)
}

pub(crate) fn model_from_value<T: Scalar>(value: serde_json::Value) -> Result<GbdtModel<T>, GbdtError> {
    match value.get("format_version").and_then(|v| v.as_str()) {
        Some(GBDT_FORMAT_VERSION) => {}
        Some(other) => {
            return Err(GbdtError::VersionMismatch { found: other.into(), expected: GBDT_FORMAT_VERSION.into() })
        }
        None => return Err(GbdtError::CorruptPayload("missing format_version".into())),
    }
    let model: GbdtModel<T> = serde_json::from_value(value).map_err(|e| GbdtError::CorruptPayload(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
