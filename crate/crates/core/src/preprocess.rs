//! Text normalisation: case folding, cleansing, tokenization, stopword
//! removal and dictionary-free Indonesian affix stripping.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_id.txt");

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("i/o error reading word list: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: word list entry `{word}` must contain only letters a-z")]
    InvalidWord { line: usize, word: String },
    #[error("min_token_len must be at least 1")]
    InvalidMinTokenLen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub min_token_len: usize,
    pub stopwords: BTreeSet<String>,
    pub enable_stemming: bool,
    /// Optional root-word list. When set, a stemmed form is only accepted if
    /// it appears here.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_dictionary: Option<BTreeSet<String>>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            min_token_len: 2,
            stopwords: default_stopwords(),
            enable_stemming: true,
            root_dictionary: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.min_token_len == 0 {
            return Err(PreprocessError::InvalidMinTokenLen);
        }
        let words = self.stopwords.iter().chain(self.root_dictionary.iter().flatten());
        for word in words {
            if !is_clean_word(word) {
                return Err(PreprocessError::InvalidWord { line: 0, word: word.clone() });
            }
        }
        Ok(())
    }
}

fn is_clean_word(word: &str) -> bool {
    !word.is_empty() && word.bytes().all(|b| b.is_ascii_lowercase())
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_word_list(DEFAULT_STOPWORDS).expect("shipped stopword list is valid")
}

/// One word per line; blank lines and `#` comments are ignored. Entries are
/// lowercased and must then consist of a-z only.
pub fn parse_word_list(text: &str) -> Result<BTreeSet<String>, PreprocessError> {
    let mut words = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let word = line.to_lowercase();
        if !is_clean_word(&word) {
            return Err(PreprocessError::InvalidWord { line: i + 1, word: line.to_string() });
        }
        words.insert(word);
    }
    Ok(words)
}

pub fn load_word_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>, PreprocessError> {
    parse_word_list(&fs::read_to_string(path)?)
}

pub fn case_fold(text: &str) -> String {
    text.to_lowercase()
}

fn is_url(token: &str) -> bool {
    let lower = token.get(..8).unwrap_or(token).to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Drops URL and mention tokens, then keeps only a-z with single spaces.
pub fn cleanse(text: &str, config: &PreprocessConfig) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if config.strip_urls && is_url(token) {
            continue;
        }
        if config.strip_mentions && token.starts_with('@') {
            continue;
        }
        out.push(' ');
        out.extend(token.chars().map(|c| if c.is_ascii_lowercase() { c } else { ' ' }));
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokenize(text: &str, config: &PreprocessConfig) -> Vec<String> {
    text.split_whitespace().filter(|t| t.chars().count() >= config.min_token_len).map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: Vec<String>, config: &PreprocessConfig) -> Vec<String> {
    tokens.into_iter().filter(|t| !config.stopwords.contains(t)).collect()
}

/// Full chain: fold, cleanse, tokenize, drop stopwords, stem. Stemmed tokens
/// shorter than `min_token_len` are dropped so the output always satisfies
/// the length bound.
pub fn preprocess_document(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let folded;
    let text = if config.lowercase {
        folded = case_fold(text);
        folded.as_str()
    } else {
        text
    };
    let tokens = remove_stopwords(tokenize(&cleanse(text, config), config), config);
    if !config.enable_stemming {
        return tokens;
    }
    tokens
        .iter()
        .map(|t| stem_token_with(t, config.root_dictionary.as_ref()))
        .filter(|t| t.chars().count() >= config.min_token_len)
        .collect()
}

const PARTICLES: [&str; 3] = ["lah", "kah", "pun"];
const POSSESSIVES: [&str; 3] = ["nya", "ku", "mu"];
const DERIVATIONAL: [&str; 3] = ["kan", "an", "i"];
/// Longest first. `meny`/`peny` recode to `s` + remainder.
const PREFIXES: [&str; 13] = ["meny", "peny", "meng", "mem", "men", "ber", "ter", "per", "me", "pe", "di", "ke", "se"];

const MIN_SUFFIX_REMAINDER: usize = 3;
const MIN_PREFIX_REMAINDER: usize = 4;
const MAX_PREFIX_STRIPS: usize = 2;

/// The longest listed suffix the word ends with decides; if its remainder is
/// too short nothing is stripped at this stage.
fn strip_suffix(word: &str, suffixes: &[&str]) -> Option<String> {
    let suffix = suffixes.iter().filter(|s| word.ends_with(*s)).max_by_key(|s| s.len())?;
    let rest = &word[..word.len() - suffix.len()];
    (rest.len() >= MIN_SUFFIX_REMAINDER).then(|| rest.to_string())
}

fn strip_prefix_once(word: &str, allow_ke: bool) -> Option<String> {
    let prefix = PREFIXES.iter().find(|p| word.starts_with(*p))?;
    if *prefix == "ke" && !allow_ke {
        return None;
    }
    let rest = &word[prefix.len()..];
    let rest = match *prefix {
        "meny" | "peny" => format!("s{rest}"),
        _ => rest.to_string(),
    };
    (rest.len() >= MIN_PREFIX_REMAINDER).then_some(rest)
}

/// Up to two prefix strips. `ke-` is only removed as the outer half of the
/// `ke-...-an` confix, i.e. when `-an` was stripped and as the first prefix.
fn strip_prefixes(word: &str, had_an: bool) -> Vec<String> {
    let mut forms = Vec::new();
    let mut current = word.to_string();
    for round in 0..MAX_PREFIX_STRIPS {
        match strip_prefix_once(&current, had_an && round == 0) {
            Some(next) => {
                forms.push(next.clone());
                current = next;
            }
            None => break,
        }
    }
    forms
}

/// Intermediate forms in stripping order; the last one is the stem.
fn stem_forms(token: &str) -> Vec<String> {
    let mut forms = vec![token.to_string()];
    let mut word = token.to_string();
    for table in [&PARTICLES[..], &POSSESSIVES[..]] {
        if let Some(next) = strip_suffix(&word, table) {
            forms.push(next.clone());
            word = next;
        }
    }

    match strip_suffix(&word, &DERIVATIONAL) {
        Some(unsuffixed) => {
            let had_an = word.ends_with("an") && !word.ends_with("kan");
            let with_suffix_stripped = strip_prefixes(&unsuffixed, had_an);
            let suffix_kept = strip_prefixes(&word, false);
            // If the prefix only comes off when the derivational suffix stays,
            // the suffix was part of the root (di-beli, not di-bel-i).
            if with_suffix_stripped.is_empty() && !suffix_kept.is_empty() {
                forms.extend(suffix_kept);
            } else {
                forms.push(unsuffixed);
                forms.extend(with_suffix_stripped);
            }
        }
        None => forms.extend(strip_prefixes(&word, false)),
    }
    forms
}

/// Dictionary-free stem of a lowercase a-z token.
///
/// Stages, each applied at most once: particles (-lah, -kah, -pun),
/// possessives (-ku, -mu, -nya), derivational suffixes (-kan, -an, -i), then
/// up to two derivational prefixes. Suffix strips need at least 3 letters
/// left, prefix strips at least 4.
pub fn stem_token(token: &str) -> String {
    stem_forms(token).pop().unwrap_or_default()
}

/// Like [`stem_token`], but with a root dictionary the result is the first
/// form (the token itself, then each successive strip) found in the
/// dictionary, or the token unchanged when none is.
pub fn stem_token_with(token: &str, dictionary: Option<&BTreeSet<String>>) -> String {
    match dictionary {
        None => stem_token(token),
        Some(dict) => stem_forms(token).into_iter().find(|f| dict.contains(f)).unwrap_or_else(|| token.to_string()),
    }
}
