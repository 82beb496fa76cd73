//! Feedback term distributions.
//!
//! Two estimators produce a [`FeedbackModel`]:
//!
//! * [`rm3_distribution`] mines the top documents of a first-pass ranking
//!   (pseudo-relevance feedback).
//! * [`grf_distribution`] estimates the relevance model from LLM-generated
//!   text instead, so it never looks at the index or a first-pass ranking:
//!
//! ```text
//! P(w|R) = β·P(w|Q) + (1 − β)·P(w|D_gen)   if w ∈ W_θ
//!        = β·P(w|Q)                          otherwise
//! ```
//!
//! where `W_θ` holds the θ most probable generated terms. Both outputs are
//! renormalized to sum to one; ranking is invariant to that scaling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::generation::{GenerationBundle, Subtask, SubtaskSelection};
use crate::index::InvertedIndex;
use crate::retrieval::{QuerySource, Ranking, WeightedQuery};
use crate::textproc::{analyze, AnalyzerConfig, TermVector};

/// Term → probability.
pub type TermDistribution = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FeedbackOrigin {
    Rm3,
    Grf,
    GrfSubtask(Subtask),
}

impl fmt::Display for FeedbackOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeedbackOrigin::Rm3 => f.write_str("rm3"),
            FeedbackOrigin::Grf => f.write_str("grf"),
            FeedbackOrigin::GrfSubtask(s) => write!(f, "grf:{s}"),
        }
    }
}

impl FromStr for FeedbackOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rm3" => Ok(FeedbackOrigin::Rm3),
            "grf" => Ok(FeedbackOrigin::Grf),
            _ => match s.strip_prefix("grf:") {
                Some(name) => Ok(FeedbackOrigin::GrfSubtask(name.parse()?)),
                None => Err(Error::Schema(format!("unknown feedback origin `{s}`"))),
            },
        }
    }
}

impl Serialize for FeedbackOrigin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeedbackOrigin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A normalized, truncated expansion distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackModel {
    pub weights: TermDistribution,
    pub origin: FeedbackOrigin,
    pub params_used: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FeedbackModel {
    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// JSON record for inspection and caching.
    pub fn to_record(&self, query_id: &str) -> FeedbackRecord {
        FeedbackRecord {
            query_id: query_id.to_string(),
            model: self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub query_id: String,
    #[serde(flatten)]
    pub model: FeedbackModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfParams {
    /// Weight of the original query model.
    pub beta: f64,
    /// Number of generated terms admitted into the expansion.
    pub theta: usize,
}

impl GrfParams {
    pub fn new(beta: f64, theta: usize) -> Result<Self> {
        let p = Self { beta, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Contract(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.theta == 0 {
            return Err(Error::Contract("theta must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rm3Params {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub original_query_weight: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Self {
            fb_docs: 10,
            fb_terms: 10,
            original_query_weight: 0.5,
        }
    }
}

impl Rm3Params {
    pub fn validate(&self) -> Result<()> {
        if self.fb_docs == 0 || self.fb_terms == 0 {
            return Err(Error::Contract("fb_docs and fb_terms must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.original_query_weight) {
            return Err(Error::Contract(format!(
                "original_query_weight must lie in [0, 1], got {}",
                self.original_query_weight
            )));
        }
        Ok(())
    }
}

/// Maximum-likelihood term distribution of a bag of terms.
pub fn estimate_mle(doc: &TermVector) -> Result<TermDistribution> {
    if doc.is_empty() {
        return Err(Error::EmptyFeedbackText);
    }
    let total = doc.total() as f64;
    Ok(doc
        .iter()
        .map(|(t, c)| (t.to_string(), c as f64 / total))
        .collect())
}

/// The `k` highest-weight terms, ties broken lexicographically.
pub fn top_terms(dist: &TermDistribution, k: usize) -> Vec<(&str, f64)> {
    let mut terms: Vec<(&str, f64)> = dist.iter().map(|(t, &w)| (t.as_str(), w)).collect();
    terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    terms.truncate(k);
    terms
}

/// Drops zero weights and rescales to unit mass. A distribution already
/// summing to one within rounding is left bit-for-bit untouched, so the
/// interpolation endpoints reproduce their inputs exactly.
fn renormalize(mut dist: TermDistribution) -> TermDistribution {
    dist.retain(|_, w| *w > 0.0);
    let sum: f64 = dist.values().sum();
    let tolerance = 4.0 * f64::EPSILON * dist.len().max(1) as f64;
    if sum > 0.0 && (sum - 1.0).abs() > tolerance {
        for w in dist.values_mut() {
            *w /= sum;
        }
    }
    dist
}

/// Generative relevance feedback: interpolates the query model with the
/// top-θ terms of the generated text's language model.
///
/// ```
/// use grf::feedback::{grf_distribution, GrfParams};
/// use grf::retrieval::parse_plain_query;
/// use grf::textproc::{AnalyzerConfig, TermVector};
///
/// let query = parse_plain_query("apple", &AnalyzerConfig::plain());
/// let generated: TermVector = ["apple", "apple", "banana"].into_iter().collect();
/// let model = grf_distribution(&query, &generated, GrfParams::new(0.5, 2).unwrap()).unwrap();
/// // apple: 0.5·1 + 0.5·2/3, banana: 0.5·1/3
/// assert!((model.weights["apple"] - 5.0 / 6.0).abs() < 1e-12);
/// assert!((model.weights["banana"] - 1.0 / 6.0).abs() < 1e-12);
/// ```
pub fn grf_distribution(
    query: &WeightedQuery,
    generated: &TermVector,
    params: GrfParams,
) -> Result<FeedbackModel> {
    grf_distribution_with_origin(query, generated, params, FeedbackOrigin::Grf)
}

pub fn grf_distribution_with_origin(
    query: &WeightedQuery,
    generated: &TermVector,
    params: GrfParams,
    origin: FeedbackOrigin,
) -> Result<FeedbackModel> {
    params.validate()?;
    let beta = params.beta;
    let mut raw = TermDistribution::new();
    if beta > 0.0 {
        for (term, &p) in query.weights() {
            raw.insert(term.clone(), beta * p);
        }
    }
    if beta < 1.0 {
        let generated_model = estimate_mle(generated)?;
        for (term, p) in top_terms(&generated_model, params.theta) {
            *raw.entry(term.to_string()).or_insert(0.0) += (1.0 - beta) * p;
        }
    }
    let weights = renormalize(raw);
    if weights.is_empty() {
        return Err(Error::EmptyFeedback);
    }
    let mut params_used = BTreeMap::new();
    params_used.insert("beta".to_string(), json!(params.beta));
    params_used.insert("theta".to_string(), json!(params.theta));
    Ok(FeedbackModel {
        weights,
        origin,
        params_used,
        warnings: Vec::new(),
    })
}

/// RM3: a relevance model over the top `fb_docs` first-pass documents,
/// truncated to `fb_terms` and interpolated with the query model.
///
/// Document weights are the first-pass scores normalized over the feedback
/// set; term probabilities within a document are unsmoothed MLE.
pub fn rm3_distribution(
    query: &WeightedQuery,
    first_pass: &Ranking,
    index: &InvertedIndex,
    params: Rm3Params,
) -> Result<FeedbackModel> {
    params.validate()?;
    if !index.has_doc_vectors() {
        return Err(Error::MissingDocVectors);
    }
    let mut params_used = BTreeMap::new();
    params_used.insert("fb_docs".to_string(), json!(params.fb_docs));
    params_used.insert("fb_terms".to_string(), json!(params.fb_terms));
    params_used.insert(
        "original_query_weight".to_string(),
        json!(params.original_query_weight),
    );
    params_used.insert("doc_weight".to_string(), json!("normalized_bm25"));
    params_used.insert("term_model".to_string(), json!("mle_unsmoothed"));

    let feedback: Vec<_> = first_pass.entries.iter().take(params.fb_docs).collect();
    let score_sum: f64 = feedback.iter().map(|e| e.score).sum();
    if feedback.is_empty() || score_sum.is_nan() || score_sum <= 0.0 {
        let weights = renormalize(query.weights().clone());
        if weights.is_empty() {
            return Err(Error::EmptyFeedback);
        }
        return Ok(FeedbackModel {
            weights,
            origin: FeedbackOrigin::Rm3,
            params_used,
            warnings: vec!["empty first pass; falling back to the query model".into()],
        });
    }

    let mut rm1 = TermDistribution::new();
    for entry in feedback {
        let ordinal = index.ordinal(&entry.doc_id).ok_or_else(|| {
            Error::Contract(format!(
                "first-pass document `{}` is not in the index",
                entry.doc_id
            ))
        })?;
        let vector = index.doc_vector(ordinal).ok_or(Error::MissingDocVectors)?;
        if vector.is_empty() {
            continue;
        }
        let doc_weight = entry.score / score_sum;
        let len = vector.total() as f64;
        for (term, count) in vector.iter() {
            *rm1.entry(term.to_string()).or_insert(0.0) += (count as f64 / len) * doc_weight;
        }
    }
    let truncated: TermDistribution = top_terms(&rm1, params.fb_terms)
        .into_iter()
        .map(|(t, w)| (t.to_string(), w))
        .collect();
    let truncated = renormalize(truncated);

    let lambda = params.original_query_weight;
    let mut raw = TermDistribution::new();
    if lambda > 0.0 {
        for (term, &p) in query.weights() {
            raw.insert(term.clone(), lambda * p);
        }
    }
    if lambda < 1.0 {
        for (term, p) in truncated {
            *raw.entry(term).or_insert(0.0) += (1.0 - lambda) * p;
        }
    }
    let weights = renormalize(raw);
    if weights.is_empty() {
        return Err(Error::EmptyFeedback);
    }
    Ok(FeedbackModel {
        weights,
        origin: FeedbackOrigin::Rm3,
        params_used,
        warnings: Vec::new(),
    })
}

/// Copies a model's weights into a query for weighted retrieval.
pub fn to_weighted_query(model: &FeedbackModel) -> Result<WeightedQuery> {
    if model.is_empty() {
        return Err(Error::EmptyFeedback);
    }
    let source = match model.origin {
        FeedbackOrigin::Rm3 => QuerySource::Rm3,
        FeedbackOrigin::Grf | FeedbackOrigin::GrfSubtask(_) => QuerySource::Grf,
    };
    WeightedQuery::new(model.weights.clone(), source)
}

/// Analyzes and merges the generated texts of the selected subtasks.
pub fn concat_generations(
    bundle: &GenerationBundle,
    subtasks: &SubtaskSelection,
    analyzer: &AnalyzerConfig,
) -> Result<TermVector> {
    let mut vector = TermVector::new();
    for subtask in subtasks.resolve() {
        let text = bundle
            .text(subtask)
            .ok_or_else(|| Error::MissingSubtask(subtask.to_string()))?;
        vector.merge(&TermVector::from_tokens(&analyze(text, analyzer)));
    }
    Ok(vector)
}
