//! Optional TOML configuration. Every key mirrors a command-line flag;
//! flags win over the file, the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub depth: Option<usize>,
    pub strict: Option<bool>,
    pub method: Option<String>,
    pub objective: Option<String>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub analyzer: Analyzer,
    #[serde(default)]
    pub bm25: Bm25,
    #[serde(default)]
    pub rm3: Rm3,
    #[serde(default)]
    pub grf: Grf,
    #[serde(default)]
    pub generation: Generation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub generations: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub folds: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyzer {
    pub stopwords: Option<PathBuf>,
    /// `porter` or `none`
    pub stemmer: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bm25 {
    pub k1: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rm3 {
    pub fb_docs: Option<usize>,
    pub fb_terms: Option<usize>,
    pub original_query_weight: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grf {
    pub beta: Option<f64>,
    pub theta: Option<usize>,
    pub subtasks: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generation {
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub frequency_penalty: Option<f64>,
    pub presence_penalty: Option<f64>,
    pub model_id: Option<String>,
    pub timeout_secs: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// `flag`, else `file`, else an error naming the flag.
pub fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("missing required option --{name}")))
}
