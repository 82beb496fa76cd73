use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GenerationParams, Subtask};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationSource {
    Live,
    Fixture,
}

/// All generated texts for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationBundle {
    pub query_id: String,
    pub query_text: String,
    pub generations: BTreeMap<Subtask, String>,
    /// Subtasks that hard-failed, with the final error message.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub failures: BTreeMap<Subtask, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub params: GenerationParams,
    pub created_at: String,
    pub source: GenerationSource,
}

impl GenerationBundle {
    pub fn new(
        query_id: impl Into<String>,
        query_text: impl Into<String>,
        params: GenerationParams,
    ) -> Self {
        Self {
            query_id: query_id.into(),
            query_text: query_text.into(),
            generations: BTreeMap::new(),
            failures: BTreeMap::new(),
            warnings: Vec::new(),
            params,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            source: GenerationSource::Fixture,
        }
    }

    /// Stores a generation, flagging empty text.
    pub fn insert(&mut self, subtask: Subtask, text: String) {
        if text.trim().is_empty() {
            self.warnings.push(format!("{subtask}: empty generation"));
        }
        self.failures.remove(&subtask);
        self.generations.insert(subtask, text);
    }

    pub fn text(&self, subtask: Subtask) -> Option<&str> {
        self.generations.get(&subtask).map(String::as_str)
    }

    pub fn is_complete(&self) -> bool {
        Subtask::ALL
            .iter()
            .all(|s| self.generations.contains_key(s))
    }
}

#[derive(Serialize)]
struct BundleFileOut<'a> {
    format_version: u32,
    #[serde(flatten)]
    bundle: &'a GenerationBundle,
}

#[derive(Deserialize)]
struct BundleFileIn {
    format_version: Option<u32>,
    query_id: String,
    query_text: String,
    generations: BTreeMap<String, String>,
    #[serde(default)]
    failures: BTreeMap<String, String>,
    #[serde(default)]
    warnings: Vec<String>,
    params: Option<GenerationParams>,
    created_at: String,
    source: GenerationSource,
}

pub fn save_bundle(path: &Path, bundle: &GenerationBundle) -> Result<()> {
    let json = serde_json::to_vec_pretty(&BundleFileOut {
        format_version: BUNDLE_FORMAT_VERSION,
        bundle,
    })
    .map_err(|e| Error::Schema(e.to_string()))?;
    write_atomic(path, &json)
}

pub fn load_bundle(path: &Path) -> Result<GenerationBundle> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_bundle(&bytes).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub(crate) fn parse_bundle(bytes: &[u8]) -> Result<GenerationBundle> {
    let raw: BundleFileIn =
        serde_json::from_slice(bytes).map_err(|e| Error::Schema(e.to_string()))?;
    let found = raw.format_version.unwrap_or(0);
    if found != BUNDLE_FORMAT_VERSION {
        return Err(Error::Version {
            kind: "generation bundle",
            found,
            expected: BUNDLE_FORMAT_VERSION,
        });
    }
    let params = raw
        .params
        .ok_or_else(|| Error::Schema("generation bundle has no params block".into()))?;
    let generations = raw
        .generations
        .into_iter()
        .map(|(name, text)| Ok((name.parse::<Subtask>()?, text)))
        .collect::<Result<_>>()?;
    let failures = raw
        .failures
        .into_iter()
        .map(|(name, msg)| Ok((name.parse::<Subtask>()?, msg)))
        .collect::<Result<_>>()?;
    Ok(GenerationBundle {
        query_id: raw.query_id,
        query_text: raw.query_text,
        generations,
        failures,
        warnings: raw.warnings,
        params,
        created_at: raw.created_at,
        source: raw.source,
    })
}
