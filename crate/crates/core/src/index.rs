//! Corpus ingestion and the inverted index.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{analyze, AnalyzerConfig, TermVector};

const INDEX_FORMAT: &str = "grf-index";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub contents: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            contents: contents.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// An immutable inverted index over whole documents.
///
/// Postings are sorted by document ordinal. Ordinals follow ingestion order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "StoredIndex", into = "StoredIndex")]
pub struct InvertedIndex {
    analyzer: AnalyzerConfig,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_vectors: Option<Vec<TermVector>>,
    ordinals: HashMap<String, u32>,
}

impl PartialEq for InvertedIndex {
    fn eq(&self, other: &Self) -> bool {
        self.analyzer == other.analyzer
            && self.postings == other.postings
            && self.doc_ids == other.doc_ids
            && self.doc_lengths == other.doc_lengths
            && self.avg_doc_length.to_bits() == other.avg_doc_length.to_bits()
            && self.doc_vectors == other.doc_vectors
    }
}

/// Builds an index from a stream of documents.
///
/// The stream may carry read errors (as produced by [`load_corpus_jsonl`]);
/// the first one aborts the build.
///
/// ```
/// use grf::index::{build_index, Document};
/// use grf::textproc::AnalyzerConfig;
///
/// let docs = vec![Ok(Document::new("d1", "a")), Ok(Document::new("d2", "a b"))];
/// let index = build_index(docs, &AnalyzerConfig::plain(), false).unwrap();
/// assert_eq!(index.document_frequency("a"), 2);
/// assert_eq!(index.avg_doc_length(), 1.5);
/// ```
pub fn build_index<I>(
    corpus: I,
    analyzer: &AnalyzerConfig,
    store_vectors: bool,
) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_ids = Vec::new();
    let mut doc_lengths = Vec::new();
    let mut doc_vectors = store_vectors.then(Vec::new);
    let mut ordinals = HashMap::new();

    for doc in corpus {
        let doc = doc?;
        if doc.doc_id.is_empty() {
            return Err(Error::Contract(format!(
                "document {} has an empty id",
                doc_ids.len() + 1
            )));
        }
        let ordinal = doc_ids.len() as u32;
        if ordinals.insert(doc.doc_id.clone(), ordinal).is_some() {
            return Err(Error::DuplicateDocId(doc.doc_id));
        }
        let tokens = analyze(&doc.contents, analyzer);
        let vector = TermVector::from_tokens(&tokens);
        for (term, tf) in vector.iter() {
            postings.entry(term.to_string()).or_default().push(Posting {
                doc: ordinal,
                tf: tf as u32,
            });
        }
        doc_lengths.push(tokens.len() as u32);
        doc_ids.push(doc.doc_id);
        if let Some(vectors) = doc_vectors.as_mut() {
            vectors.push(vector);
        }
    }

    let avg_doc_length = mean_length(&doc_lengths);
    Ok(InvertedIndex {
        analyzer: analyzer.clone(),
        postings,
        doc_ids,
        doc_lengths,
        avg_doc_length,
        doc_vectors,
        ordinals,
    })
}

fn mean_length(lengths: &[u32]) -> f64 {
    if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().map(|&l| l as u64).sum::<u64>() as f64 / lengths.len() as f64
    }
}

impl InvertedIndex {
    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.doc_lengths.iter().map(|&l| l as u64).sum()
    }

    /// Number of documents containing `term`; 0 if absent.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// All terms with their postings, in lexicographic term order.
    pub fn iter_postings(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings
            .iter()
            .map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, ordinal: u32) -> u32 {
        self.doc_lengths[ordinal as usize]
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.ordinals.get(doc_id).copied()
    }

    pub fn has_doc_vectors(&self) -> bool {
        self.doc_vectors.is_some()
    }

    /// Term vector of a document, if vectors were stored at build time.
    pub fn doc_vector(&self, ordinal: u32) -> Option<&TermVector> {
        self.doc_vectors.as_ref().map(|v| &v[ordinal as usize])
    }

    /// Writes the index as a single versioned JSON document.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| Error::Schema(e.to_string()))?;
        crate::fsutil::write_atomic(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let header: serde_json::Value = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        match header.get("format").and_then(|f| f.as_str()) {
            Some(INDEX_FORMAT) => {}
            _ => {
                return Err(Error::Schema(format!(
                    "{} is not an index file",
                    path.display()
                )))
            }
        }
        let version = header.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != INDEX_VERSION {
            return Err(Error::Version {
                kind: "index",
                found: version,
                expected: INDEX_VERSION,
            });
        }
        serde_json::from_value(header)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize, Deserialize)]
struct StoredIndex {
    format: String,
    version: u32,
    analyzer: AnalyzerConfig,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_vectors: Option<Vec<TermVector>>,
}

impl From<InvertedIndex> for StoredIndex {
    fn from(index: InvertedIndex) -> Self {
        StoredIndex {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            analyzer: index.analyzer,
            doc_ids: index.doc_ids,
            doc_lengths: index.doc_lengths,
            postings: index
                .postings
                .into_iter()
                .map(|(t, p)| (t, p.into_iter().map(|p| (p.doc, p.tf)).collect()))
                .collect(),
            doc_vectors: index.doc_vectors,
        }
    }
}

impl TryFrom<StoredIndex> for InvertedIndex {
    type Error = String;

    fn try_from(stored: StoredIndex) -> Result<Self, Self::Error> {
        if stored.doc_ids.len() != stored.doc_lengths.len() {
            return Err("doc_ids and doc_lengths differ in length".into());
        }
        let n = stored.doc_ids.len() as u32;
        let mut ordinals = HashMap::with_capacity(stored.doc_ids.len());
        for (i, id) in stored.doc_ids.iter().enumerate() {
            if ordinals.insert(id.clone(), i as u32).is_some() {
                return Err(format!("duplicate document id `{id}`"));
            }
        }
        let mut postings = BTreeMap::new();
        for (term, list) in stored.postings {
            let mut prev = None;
            let mut out = Vec::with_capacity(list.len());
            for (doc, tf) in list {
                if doc >= n || prev.is_some_and(|p| p >= doc) {
                    return Err(format!("postings for `{term}` are not strictly increasing"));
                }
                if tf == 0 || tf > stored.doc_lengths[doc as usize] {
                    return Err(format!("postings for `{term}` carry an invalid tf"));
                }
                prev = Some(doc);
                out.push(Posting { doc, tf });
            }
            postings.insert(term, out);
        }
        if let Some(vectors) = &stored.doc_vectors {
            if vectors.len() != stored.doc_ids.len() {
                return Err("doc_vectors length does not match document count".into());
            }
        }
        Ok(InvertedIndex {
            analyzer: stored.analyzer,
            postings,
            avg_doc_length: mean_length(&stored.doc_lengths),
            doc_ids: stored.doc_ids,
            doc_lengths: stored.doc_lengths,
            doc_vectors: stored.doc_vectors,
            ordinals,
        })
    }
}

#[derive(Deserialize)]
struct CorpusRecord {
    id: Option<String>,
    contents: Option<String>,
}

/// Streams documents from a JSON-lines file with `id` and `contents` fields.
///
/// Blank lines are skipped. Errors carry the 1-based line number.
pub fn load_corpus_jsonl(path: &Path) -> Result<impl Iterator<Item = Result<Document>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let path = path.to_path_buf();
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line_no = i + 1;
            match line {
                Err(e) => Some(Err(Error::io(&path, e))),
                Ok(line) if line.trim().is_empty() => None,
                Ok(line) => Some(parse_corpus_line(&line, line_no)),
            }
        }))
}

fn parse_corpus_line(line: &str, line_no: usize) -> Result<Document> {
    let record: CorpusRecord = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
        line: line_no,
        message: e.to_string(),
    })?;
    let doc_id = record.id.ok_or(Error::MissingField {
        line: line_no,
        field: "id",
    })?;
    let contents = record.contents.ok_or(Error::MissingField {
        line: line_no,
        field: "contents",
    })?;
    Ok(Document { doc_id, contents })
}
