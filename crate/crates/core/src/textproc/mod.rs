//! Text analysis shared by indexing, query parsing and feedback estimation.
//!
//! The pipeline is: NFC normalization, lowercasing, splitting on every
//! character that is not a letter or digit, stopword removal, then Porter
//! stemming. Stopwords are matched against the unstemmed token.

pub mod porter;
mod term_vector;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub use term_vector::TermVector;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    Porter,
    None,
}

/// How raw text is split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenPattern {
    /// Maximal runs of Unicode letters and digits.
    #[default]
    AlphanumericRuns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub lowercase: bool,
    #[serde(default)]
    pub token_pattern: TokenPattern,
}

impl Default for AnalyzerConfig {
    /// The default English pipeline: 33-word stopword list and Porter stemming.
    fn default() -> Self {
        Self {
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
            stemmer: Stemmer::Porter,
            lowercase: true,
            token_pattern: TokenPattern::AlphanumericRuns,
        }
    }
}

impl AnalyzerConfig {
    /// Tokenize and lowercase only; no stopwords, no stemming.
    pub fn plain() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            stemmer: Stemmer::None,
            lowercase: true,
            token_pattern: TokenPattern::AlphanumericRuns,
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        self
    }

    pub fn with_stemmer(mut self, stemmer: Stemmer) -> Self {
        self.stemmer = stemmer;
        self
    }

    /// Replaces the stopword list with the contents of a file (one term per
    /// line, `#` starts a comment).
    pub fn with_stopword_file(mut self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = parse_stopwords(&text);
        Ok(self)
    }
}

/// Parses a stopword list: one term per line, `#` comments, blank lines ignored.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Runs the full analysis pipeline over `text`.
///
/// ```
/// use grf::textproc::{analyze, AnalyzerConfig};
///
/// let config = AnalyzerConfig::default();
/// assert_eq!(analyze("The running runner runs", &config), ["run", "runner", "run"]);
/// assert!(analyze("", &config).is_empty());
/// ```
pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    let normalized = if config.lowercase {
        normalized.to_lowercase()
    } else {
        normalized
    };
    normalized
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !config.stopwords.contains(*t))
        .map(|t| match config.stemmer {
            Stemmer::Porter => porter::stem(t),
            Stemmer::None => t.to_string(),
        })
        .collect()
}

/// Counts tokens into a [`TermVector`].
pub fn to_term_vector<S: AsRef<str>>(tokens: &[S]) -> TermVector {
    TermVector::from_tokens(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stop_the() -> AnalyzerConfig {
        AnalyzerConfig::default().with_stopwords(["the"])
    }

    #[test]
    fn empty_input() {
        assert!(analyze("", &AnalyzerConfig::default()).is_empty());
        assert!(analyze("  ,;!! ", &AnalyzerConfig::default()).is_empty());
    }

    #[test]
    fn stopwords_then_stemming() {
        assert_eq!(
            analyze("The running runner runs", &stop_the()),
            ["run", "runner", "run"]
        );
    }

    #[test]
    fn case_and_punctuation() {
        assert_eq!(
            analyze("apple, Apple! APPLE", &AnalyzerConfig::default()),
            ["appl", "appl", "appl"]
        );
    }

    #[test]
    fn stopwords_are_removed_before_stemming() {
        // "thing" is not a stopword even though "the" is a prefix, and "is"
        // is removed before the stemmer could see it.
        let config = AnalyzerConfig::default().with_stopwords(["is", "thing"]);
        assert_eq!(analyze("is things thing", &config), ["thing"]);
    }

    #[test]
    fn non_ascii_letters_are_token_characters() {
        let config = AnalyzerConfig::plain();
        assert_eq!(
            analyze("Café-au-lait naïve", &config),
            ["café", "au", "lait", "naïve"]
        );
        // Decomposed e + combining acute normalizes to the composed form.
        assert_eq!(analyze("Cafe\u{301}", &config), ["café"]);
    }

    #[test]
    fn digits_are_kept() {
        assert_eq!(
            analyze("covid19 in 2020", &AnalyzerConfig::plain()),
            ["covid19", "in", "2020"]
        );
    }

    #[test]
    fn no_lowercase_keeps_case() {
        let mut config = AnalyzerConfig::plain().with_stopwords(["the"]);
        config.lowercase = false;
        assert_eq!(analyze("The the", &config), ["The"]);
    }

    #[test]
    fn stopword_file_format() {
        let words = parse_stopwords("# header\nA\n\nthe # trailing\n  of  \n");
        assert_eq!(words.into_iter().collect::<Vec<_>>(), ["a", "of", "the"]);
    }

    #[test]
    fn default_list_has_33_terms() {
        assert_eq!(AnalyzerConfig::default().stopwords.len(), 33);
    }

    #[test]
    fn term_vector_examples() {
        let empty: [&str; 0] = [];
        assert_eq!(to_term_vector(&empty).total(), 0);
        let v = to_term_vector(&["a", "b", "a"]);
        assert_eq!(v.count("a"), 2);
        assert_eq!(v.count("b"), 1);
        assert_eq!(v.total(), 3);
        let v = to_term_vector(&["x"]);
        assert_eq!((v.count("x"), v.total()), (1, 1));
    }
}
