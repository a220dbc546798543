//! TOML run configuration with sections `[split]`, `[preprocess]`,
//! `[features]` and `[train]`. Every key is optional; omitted keys keep the
//! library defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use sentiscope_core::gbdt::ClassWeighting;
use sentiscope_core::preprocess::load_word_list;
use sentiscope_core::{FeatureConfig, PreprocessConfig, SplitSpec, TrainConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub features: FeaturesSection,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub test_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub stratified: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub lowercase: Option<bool>,
    pub strip_urls: Option<bool>,
    pub strip_mentions: Option<bool>,
    pub min_token_len: Option<usize>,
    /// Word list replacing the built-in stopwords; relative to the config file.
    pub stopwords_path: Option<PathBuf>,
    pub enable_stemming: Option<bool>,
    pub root_dictionary_path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesSection {
    pub min_df: Option<usize>,
    /// 0 disables the cap.
    pub max_features: Option<usize>,
    pub sublinear_tf: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub n_rounds: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_depth: Option<usize>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub min_child_weight: Option<f64>,
    pub class_weighting: Option<ClassWeighting>,
    pub seed: Option<u64>,
    pub oversample: Option<bool>,
}

/// Fully resolved settings for one command invocation.
#[derive(Debug, Clone, Default)]
pub struct CliConfig {
    pub split: SplitSpec,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub oversample: bool,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub env_seed: Option<u64>,
    pub oversample: bool,
    pub class_weighting: Option<ClassWeighting>,
    pub skip_stemming: bool,
    pub stopwords: Option<PathBuf>,
}

fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (file, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let file: ConfigFile =
                    toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                (file, p.parent())
            }
            None => (ConfigFile::default(), None),
        };
        Self::from_file(file, base, overrides)
    }

    /// Seed precedence: `--seed`, then the file, then `SENTISCOPE_SEED`, then 0.
    pub fn from_file(file: ConfigFile, base: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = CliConfig::default();
        let fallback_seed = overrides.env_seed.unwrap_or(0);

        let s = file.split;
        cfg.split.test_fraction = s.test_fraction.unwrap_or(cfg.split.test_fraction);
        cfg.split.stratified = s.stratified.unwrap_or(cfg.split.stratified);
        cfg.split.seed = overrides.seed.or(s.seed).unwrap_or(fallback_seed);

        let p = file.preprocess;
        let pre = &mut cfg.preprocess;
        pre.lowercase = p.lowercase.unwrap_or(pre.lowercase);
        pre.strip_urls = p.strip_urls.unwrap_or(pre.strip_urls);
        pre.strip_mentions = p.strip_mentions.unwrap_or(pre.strip_mentions);
        pre.min_token_len = p.min_token_len.unwrap_or(pre.min_token_len);
        pre.enable_stemming = p.enable_stemming.unwrap_or(pre.enable_stemming) && !overrides.skip_stemming;
        let stopwords = overrides.stopwords.clone().or_else(|| p.stopwords_path.map(|sp| resolve(base, &sp)));
        if let Some(path) = stopwords {
            pre.stopwords =
                load_word_list(&path).with_context(|| format!("reading stopword list {}", path.display()))?;
        }
        if let Some(path) = p.root_dictionary_path.map(|rp| resolve(base, &rp)) {
            pre.root_dictionary =
                Some(load_word_list(&path).with_context(|| format!("reading root dictionary {}", path.display()))?);
        }

        let f = file.features;
        cfg.features.min_df = f.min_df.unwrap_or(cfg.features.min_df);
        if let Some(cap) = f.max_features {
            cfg.features.max_features = (cap > 0).then_some(cap);
        }
        cfg.features.sublinear_tf = f.sublinear_tf.unwrap_or(cfg.features.sublinear_tf);

        let t = file.train;
        let tr = &mut cfg.train;
        tr.n_rounds = t.n_rounds.unwrap_or(tr.n_rounds);
        tr.learning_rate = t.learning_rate.unwrap_or(tr.learning_rate);
        tr.max_depth = t.max_depth.unwrap_or(tr.max_depth);
        tr.lambda = t.lambda.unwrap_or(tr.lambda);
        tr.gamma = t.gamma.unwrap_or(tr.gamma);
        tr.min_child_weight = t.min_child_weight.unwrap_or(tr.min_child_weight);
        tr.class_weighting = overrides.class_weighting.or(t.class_weighting).unwrap_or(tr.class_weighting);
        tr.seed = overrides.seed.or(t.seed).unwrap_or(fallback_seed);
        cfg.oversample = overrides.oversample || t.oversample.unwrap_or(false);

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate().context("invalid [split] section")?;
        self.preprocess.validate().context("invalid [preprocess] section")?;
        self.features.validate().context("invalid [features] section")?;
        self.train.validate().context("invalid [train] section")?;
        Ok(())
    }
}
