//! Sentiment classification toolkit for short, noisy Indonesian comments.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: ingestion, label statistics, stratified splitting, oversampling
//! - [`preprocess`]: case folding, cleansing, tokenization, stopwords, affix stripping
//! - [`features`]: TF-IDF vocabulary and L2-normalised sparse vectors
//! - [`gbdt`]: multiclass gradient-boosted trees with a second-order regularised objective
//! - [`eval`]: confusion matrices and classification metrics
//! - [`eda`]: exploratory statistics (lengths, n-grams, word frequencies)
//! - [`pipeline`]: the persisted train/predict bundle
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! crate root fix the scalar to `f64`, which is what the pipeline persists.

pub mod corpus;
pub mod eda;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
mod scalar;

pub use scalar::Scalar;

pub use corpus::{LabeledCorpus, RawComment, Sentiment, SplitSpec};
pub use eval::{ConfusionMatrix, MetricsReport};
pub use features::FeatureConfig;
pub use gbdt::TrainConfig;
pub use preprocess::PreprocessConfig;

/// Sparse TF-IDF vector over `f64`.
pub type SparseVector = features::SparseVector<f64>;
/// Fitted TF-IDF model over `f64`.
pub type TfIdfModel = features::TfIdfModel<f64>;
/// Regression tree node over `f64`.
pub type TreeNode = gbdt::TreeNode<f64>;
/// Boosted ensemble over `f64`.
pub type GbdtModel = gbdt::GbdtModel<f64>;
/// Persistable pipeline over `f64`.
pub type PipelineModel = pipeline::PipelineModel<f64>;

/// Single-precision variants, mostly useful for memory-constrained inference.
pub type SparseVectorF32 = features::SparseVector<f32>;
pub type GbdtModelF32 = gbdt::GbdtModel<f32>;
