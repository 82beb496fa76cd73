//! BM25 scoring for plain and weighted queries.
//!
//! A weighted query scores a document as
//!
//! ```text
//! score(d) = Σ_w weight(w) · idf(w) · tf(w,d)·(k1+1) / (tf(w,d) + k1·(1 − b + b·|d|/avgdl))
//! idf(w)   = ln(1 + (N − df(w) + 0.5) / (df(w) + 0.5))
//! ```
//!
//! The idf is strictly positive, so every matching document has a positive
//! score and expanded queries never subtract evidence.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::textproc::{analyze, AnalyzerConfig, TermVector};

/// Default run depth.
pub const DEFAULT_DEPTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let params = Self { k1, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::Contract(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Contract(format!(
                "b must lie in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// Corpus-level statistics BM25 needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexStats {
    pub num_docs: usize,
    pub avg_doc_length: f64,
}

impl IndexStats {
    pub fn of(index: &InvertedIndex) -> Self {
        Self {
            num_docs: index.num_docs(),
            avg_doc_length: index.avg_doc_length(),
        }
    }
}

/// Non-negative BM25 idf.
pub fn idf(df: usize, num_docs: usize) -> f64 {
    let n = num_docs as f64;
    let df = df as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

fn tf_component(tf: f64, doc_len: f64, avg_doc_length: f64, params: Bm25Params) -> f64 {
    let norm = params.k1 * (1.0 - params.b + params.b * doc_len / avg_doc_length);
    tf * (params.k1 + 1.0) / (tf + norm)
}

/// BM25 contribution of one term to one document.
///
/// ```
/// use grf::retrieval::{bm25_term_score, Bm25Params, IndexStats};
///
/// let stats = IndexStats { num_docs: 3, avg_doc_length: 4.0 };
/// let s = bm25_term_score(2, 4, 1, stats, Bm25Params { k1: 0.9, b: 0.4 }).unwrap();
/// assert!((s - 1.285_224_538_429_158_5).abs() < 1e-12);
/// ```
pub fn bm25_term_score(
    tf: u32,
    doc_len: u32,
    df: usize,
    stats: IndexStats,
    params: Bm25Params,
) -> Result<f64> {
    if tf == 0 || df == 0 || doc_len == 0 {
        return Err(Error::Contract(format!(
            "bm25_term_score requires tf, df and doc_len >= 1 (tf={tf}, df={df}, doc_len={doc_len})"
        )));
    }
    if stats.num_docs < df || stats.avg_doc_length.is_nan() || stats.avg_doc_length <= 0.0 {
        return Err(Error::Contract(format!(
            "inconsistent index statistics: N={}, df={df}, avgdl={}",
            stats.num_docs, stats.avg_doc_length
        )));
    }
    params.validate()?;
    Ok(idf(df, stats.num_docs)
        * tf_component(tf as f64, doc_len as f64, stats.avg_doc_length, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuerySource {
    Plain,
    Rm3,
    Grf,
}

/// Analyzed terms with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuery {
    weights: BTreeMap<String, f64>,
    source: QuerySource,
}

impl WeightedQuery {
    /// Builds a query, rejecting non-positive or non-finite weights.
    pub fn new(weights: BTreeMap<String, f64>, source: QuerySource) -> Result<Self> {
        if let Some((term, w)) = weights.iter().find(|(_, &w)| !(w.is_finite() && w > 0.0)) {
            return Err(Error::Contract(format!(
                "query weight for `{term}` must be positive, got {w}"
            )));
        }
        Ok(Self { weights, source })
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn source(&self) -> QuerySource {
        self.source
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }

    /// Maximum-likelihood query model from a term vector.
    pub fn from_term_vector(vector: &TermVector) -> Self {
        let total = vector.total() as f64;
        let weights = vector
            .iter()
            .map(|(t, c)| (t.to_string(), c as f64 / total))
            .collect();
        Self {
            weights,
            source: QuerySource::Plain,
        }
    }
}

/// Analyzes query text into a maximum-likelihood term distribution.
///
/// ```
/// use grf::retrieval::parse_plain_query;
/// use grf::textproc::AnalyzerConfig;
///
/// let q = parse_plain_query("apple apple pie", &AnalyzerConfig::plain());
/// assert!((q.weight("apple") - 2.0 / 3.0).abs() < 1e-12);
/// assert!((q.weight("pie") - 1.0 / 3.0).abs() < 1e-12);
/// ```
pub fn parse_plain_query(text: &str, analyzer: &AnalyzerConfig) -> WeightedQuery {
    WeightedQuery::from_term_vector(&TermVector::from_tokens(&analyze(text, analyzer)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
}

/// A ranked list for one query: scores non-increasing, ids unique.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ranking {
    pub query_id: String,
    pub entries: Vec<RankedDoc>,
    /// Set when the query had no terms left after analysis.
    #[serde(default)]
    pub empty_query: bool,
}

impl Ranking {
    pub fn new(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// Sorts by score descending, ties by doc id ascending.
    pub fn sort(&mut self) {
        self.entries.sort_by(compare_entries);
    }
}

pub(crate) fn compare_entries(a: &RankedDoc, b: &RankedDoc) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Scores every document matching at least one query term and returns the
/// top `depth`, ties broken by doc id ascending.
pub fn search(
    index: &InvertedIndex,
    query_id: &str,
    query: &WeightedQuery,
    params: Bm25Params,
    depth: usize,
) -> Result<Ranking> {
    if depth == 0 {
        return Err(Error::Contract("search depth must be >= 1".into()));
    }
    params.validate()?;
    let mut ranking = Ranking::new(query_id);
    if query.is_empty() {
        ranking.empty_query = true;
        return Ok(ranking);
    }

    let n = index.num_docs();
    let avgdl = index.avg_doc_length();
    let mut scores = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    for (term, &weight) in query.weights() {
        let postings = index.postings(term);
        if postings.is_empty() {
            continue;
        }
        let term_idf = idf(postings.len(), n);
        for p in postings {
            let slot = &mut scores[p.doc as usize];
            if *slot == 0.0 {
                touched.push(p.doc);
            }
            let dl = index.doc_length(p.doc) as f64;
            *slot += weight * (term_idf * tf_component(p.tf as f64, dl, avgdl, params));
        }
    }

    let mut entries: Vec<RankedDoc> = touched
        .into_iter()
        .filter(|&d| scores[d as usize] > 0.0)
        .map(|d| RankedDoc {
            doc_id: index.doc_id(d).to_string(),
            score: scores[d as usize],
        })
        .collect();
    if entries.len() > depth {
        entries.select_nth_unstable_by(depth - 1, compare_entries);
        entries.truncate(depth);
    }
    entries.sort_by(compare_entries);
    ranking.entries = entries;
    Ok(ranking)
}
