use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bundle::{save_bundle, GenerationBundle, GenerationSource};
use super::client::{generate, CompletionClient};
use super::{GenerationParams, Subtask, SubtaskSpec};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

/// One cached generation, stored at `<dir>/<query_id>/<subtask>.json`.
///
/// Fixture files use the same layout with only `text`, `params` and
/// `created_at`; the remaining fields are optional on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub text: String,
    #[serde(default)]
    pub params: Option<GenerationParams>,
    #[serde(default)]
    pub created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<GenerationSource>,
}

/// On-disk generation cache keyed by query, subtask, template and params.
#[derive(Debug, Clone)]
pub struct GenerationCache {
    dir: PathBuf,
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Cache key over (query id, subtask, template hash, params hash). The
/// template hash covers the token budget too.
pub(crate) fn cache_key(query_id: &str, spec: &SubtaskSpec, params: &GenerationParams) -> String {
    let template_hash = sha256_hex(&[
        spec.prompt_template.as_bytes(),
        &spec.max_tokens.to_le_bytes(),
    ]);
    let params_json = serde_json::to_vec(params).expect("params serialize");
    let params_hash = sha256_hex(&[&params_json]);
    sha256_hex(&[
        query_id.as_bytes(),
        spec.subtask.name().as_bytes(),
        template_hash.as_bytes(),
        params_hash.as_bytes(),
    ])
}

fn check_query_id(query_id: &str) -> Result<()> {
    if query_id.is_empty() || query_id == "." || query_id == ".." || query_id.contains(['/', '\\'])
    {
        return Err(Error::Contract(format!(
            "query id `{query_id}` cannot be used as a directory name"
        )));
    }
    Ok(())
}

impl GenerationCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, query_id: &str, subtask: Subtask) -> PathBuf {
        self.dir.join(query_id).join(format!("{subtask}.json"))
    }

    pub fn bundle_path(&self, query_id: &str) -> PathBuf {
        self.dir.join(query_id).join("bundle.json")
    }

    pub fn read_entry(&self, query_id: &str, subtask: Subtask) -> Result<Option<CacheEntry>> {
        let path = self.entry_path(query_id, subtask);
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| Error::Schema(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// A cached entry whose key matches the current spec and params.
    pub fn lookup(
        &self,
        query_id: &str,
        spec: &SubtaskSpec,
        params: &GenerationParams,
    ) -> Result<Option<CacheEntry>> {
        let key = cache_key(query_id, spec, params);
        Ok(self
            .read_entry(query_id, spec.subtask)?
            .filter(|e| e.cache_key.as_deref() == Some(key.as_str())))
    }

    pub fn store(&self, query_id: &str, spec: &SubtaskSpec, entry: &CacheEntry) -> Result<()> {
        check_query_id(query_id)?;
        let json = serde_json::to_vec_pretty(entry).map_err(|e| Error::Schema(e.to_string()))?;
        write_atomic(&self.entry_path(query_id, spec.subtask), &json)
    }

    /// Assembles a bundle from whatever per-subtask files exist for a query.
    /// Works on both caches and fixture directories.
    pub fn load_bundle(&self, query_id: &str, query_text: &str) -> Result<GenerationBundle> {
        check_query_id(query_id)?;
        let mut bundle = GenerationBundle::new(query_id, query_text, GenerationParams::default());
        let mut created: Option<String> = None;
        let mut source = GenerationSource::Fixture;
        let mut found = false;
        for subtask in Subtask::ALL {
            let Some(entry) = self.read_entry(query_id, subtask)? else {
                continue;
            };
            found = true;
            if let Some(p) = entry.params.clone() {
                bundle.params = p;
            }
            if entry.source == Some(GenerationSource::Live) {
                source = GenerationSource::Live;
            }
            if let Some(ts) = entry.created_at.clone() {
                if created.as_ref().map_or(true, |c| ts < *c) {
                    created = Some(ts);
                }
            }
            bundle.insert(subtask, entry.text);
        }
        if !found {
            return Err(Error::Schema(format!(
                "no generations for query `{query_id}` under {}",
                self.dir.display()
            )));
        }
        bundle.source = source;
        if let Some(ts) = created {
            bundle.created_at = ts;
        }
        Ok(bundle)
    }
}

/// Generates (or reuses from cache) every requested subtask for one query.
///
/// Subtasks that fail after retries are recorded in `failures` rather than
/// aborting; the caller decides whether a partial bundle is usable. With a
/// cache, the bundle is also written to `<dir>/<query_id>/bundle.json`
/// before returning.
pub fn generate_bundle(
    client: &dyn CompletionClient,
    cache: Option<&GenerationCache>,
    query_id: &str,
    query_text: &str,
    specs: &[SubtaskSpec],
    params: &GenerationParams,
) -> Result<GenerationBundle> {
    check_query_id(query_id)?;
    let mut bundle = GenerationBundle::new(query_id, query_text, params.clone());
    let mut earliest: Option<String> = None;
    let mut source = client.source();
    let mut all_cached = true;
    let mut cached_source: Option<GenerationSource> = None;

    for spec in specs {
        let cached = match cache {
            Some(c) => c.lookup(query_id, spec, params)?,
            None => None,
        };
        let entry = match cached {
            Some(entry) => {
                if entry.source == Some(GenerationSource::Live) || cached_source.is_none() {
                    cached_source = entry.source;
                }
                entry
            }
            None => {
                all_cached = false;
                match generate(client, spec, query_id, query_text, params) {
                    Ok(completion) => {
                        let entry = CacheEntry {
                            text: completion.text,
                            params: Some(params.clone()),
                            created_at: Some(
                                completion
                                    .created_at
                                    .unwrap_or_else(|| bundle.created_at.clone()),
                            ),
                            cache_key: Some(cache_key(query_id, spec, params)),
                            source: Some(client.source()),
                        };
                        if let Some(c) = cache {
                            c.store(query_id, spec, &entry)?;
                        }
                        entry
                    }
                    Err(e @ Error::Config(_)) => return Err(e),
                    Err(e) => {
                        log::warn!("{query_id}/{}: {e}", spec.subtask);
                        bundle.failures.insert(spec.subtask, e.to_string());
                        continue;
                    }
                }
            }
        };
        if let Some(ts) = &entry.created_at {
            if earliest.as_ref().map_or(true, |e| ts < e) {
                earliest = Some(ts.clone());
            }
        }
        bundle.insert(spec.subtask, entry.text);
    }

    if all_cached {
        if let Some(s) = cached_source {
            source = s;
        }
    }
    bundle.source = source;
    if let Some(ts) = earliest {
        bundle.created_at = ts;
    }
    if let Some(c) = cache {
        save_bundle(&c.bundle_path(query_id), &bundle)?;
    }
    Ok(bundle)
}
