//! Per-query effectiveness metrics.
//!
//! Rankings are consumed in their stored order. Unjudged documents have
//! grade 0. For AP and recall a document is relevant when its grade reaches
//! the binarization threshold; queries with no relevant documents yield
//! `None` so callers can exclude them from means.

use std::collections::BTreeMap;

use crate::retrieval::Ranking;

pub type Judgments = BTreeMap<String, u32>;

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    // rank is 1-based
    ((rank + 1) as f64).log2()
}

/// NDCG at cutoff `k` with exponential gain and log2 discount.
pub fn ndcg_at(ranking: &Ranking, judgments: &Judgments, k: usize) -> f64 {
    let dcg: f64 = ranking
        .entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, e)| gain(judgments.get(&e.doc_id).copied().unwrap_or(0)) / discount(i + 1))
        .sum();
    let mut ideal: Vec<u32> = judgments.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i + 1))
        .sum();
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

/// NDCG@10.
///
/// ```
/// use grf::eval::metrics::ndcg_at_10;
/// use grf::retrieval::{Ranking, RankedDoc};
///
/// let mut run = Ranking::new("q");
/// for (d, s) in [("d2", 3.0), ("d1", 2.0), ("d3", 1.0)] {
///     run.entries.push(RankedDoc { doc_id: d.into(), score: s });
/// }
/// let qrels = [("d1".to_string(), 3), ("d3".to_string(), 1)].into_iter().collect();
/// assert!((ndcg_at_10(&run, &qrels) - 0.644_286_926_203_082_8).abs() < 1e-12);
/// ```
pub fn ndcg_at_10(ranking: &Ranking, judgments: &Judgments) -> f64 {
    ndcg_at(ranking, judgments, 10)
}

fn num_relevant(judgments: &Judgments, threshold: u32) -> usize {
    judgments.values().filter(|&&g| g >= threshold).count()
}

fn is_relevant(judgments: &Judgments, doc_id: &str, threshold: u32) -> bool {
    judgments.get(doc_id).is_some_and(|&g| g >= threshold)
}

/// Average precision over the top `depth` entries; `None` when the query
/// has no relevant documents.
pub fn average_precision(
    ranking: &Ranking,
    judgments: &Judgments,
    threshold: u32,
    depth: usize,
) -> Option<f64> {
    let total = num_relevant(judgments, threshold);
    if total == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, e) in ranking.entries.iter().take(depth).enumerate() {
        if is_relevant(judgments, &e.doc_id, threshold) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

/// Fraction of relevant documents within the top `depth`.
pub fn recall_at(
    ranking: &Ranking,
    judgments: &Judgments,
    threshold: u32,
    depth: usize,
) -> Option<f64> {
    let total = num_relevant(judgments, threshold);
    if total == 0 {
        return None;
    }
    let found = ranking
        .entries
        .iter()
        .take(depth)
        .filter(|e| is_relevant(judgments, &e.doc_id, threshold))
        .count();
    Some(found as f64 / total as f64)
}

pub fn recall_at_1000(ranking: &Ranking, judgments: &Judgments, threshold: u32) -> Option<f64> {
    recall_at(ranking, judgments, threshold, 1000)
}
