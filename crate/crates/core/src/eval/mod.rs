//! TREC-style evaluation: NDCG@10, MAP and Recall@1000 with paired
//! significance testing.

pub mod metrics;
mod trec;
mod ttest;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::Ranking;

pub use trec::{Qrels, RunFile};
pub use ttest::{
    ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_two_tailed, TTest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ndcg10,
    Map,
    R1000,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ndcg10, Metric::Map, Metric::R1000];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Ndcg10 => "NDCG@10",
            Metric::Map => "MAP",
            Metric::R1000 => "R@1k",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Ndcg10 => "ndcg10",
            Metric::Map => "map",
            Metric::R1000 => "r1000",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ndcg10" | "ndcg@10" | "ndcg_cut_10" => Ok(Metric::Ndcg10),
            "map" | "ap" => Ok(Metric::Map),
            "r1000" | "r@1k" | "r@1000" | "recall_1000" => Ok(Metric::R1000),
            _ => Err(Error::Config(format!(
                "unknown metric `{s}` (expected ndcg10, map or r1000)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Minimum grade counted as relevant for MAP and recall.
    pub rel_threshold: u32,
    pub depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rel_threshold: 1,
            depth: 1000,
        }
    }
}

/// Metric values for one query. MAP and recall are `None` when the query
/// has no relevant documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub ndcg10: f64,
    pub map: Option<f64>,
    pub r1000: Option<f64>,
}

impl QueryMetrics {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Ndcg10 => Some(self.ndcg10),
            Metric::Map => self.map,
            Metric::R1000 => self.r1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub ndcg10: f64,
    pub map: f64,
    pub r1000: f64,
}

impl MeanMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Ndcg10 => self.ndcg10,
            Metric::Map => self.map,
            Metric::R1000 => self.r1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub means: MeanMetrics,
    pub num_queries: usize,
    /// Judged queries the run did not contain (scored 0).
    pub missing_from_run: Vec<String>,
    /// Queries excluded from MAP/recall means for lack of relevant documents.
    pub excluded: Vec<String>,
}

impl EvalReport {
    /// Per-query values of `metric` for the queries that define it.
    pub fn values(&self, metric: Metric) -> BTreeMap<&str, f64> {
        self.per_query
            .iter()
            .filter_map(|(q, m)| m.get(metric).map(|v| (q.as_str(), v)))
            .collect()
    }

    fn mean_over<'a>(&self, queries: impl Iterator<Item = &'a String>, metric: Metric) -> f64 {
        let values: Vec<f64> = queries
            .filter_map(|q| self.per_query.get(q).and_then(|m| m.get(metric)))
            .collect();
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    }
}

/// Metrics for one ranking against one query's judgments.
pub fn evaluate_query(
    ranking: &Ranking,
    judgments: &metrics::Judgments,
    config: EvalConfig,
) -> QueryMetrics {
    QueryMetrics {
        ndcg10: metrics::ndcg_at_10(ranking, judgments),
        map: metrics::average_precision(ranking, judgments, config.rel_threshold, config.depth),
        r1000: metrics::recall_at(
            ranking,
            judgments,
            config.rel_threshold,
            1000.min(config.depth),
        ),
    }
}

/// Evaluates every judged query. Judged queries absent from the run score
/// 0; queries in the run but not in the qrels are ignored.
pub fn evaluate(run: &RunFile, qrels: &Qrels, config: EvalConfig) -> Result<EvalReport> {
    if !qrels.query_ids().any(|q| run.get(q).is_some()) {
        return Err(Error::NoSharedQueries);
    }
    let empty = Ranking::default();
    let mut per_query = BTreeMap::new();
    let mut missing_from_run = Vec::new();
    let mut excluded = Vec::new();
    for qid in qrels.query_ids() {
        let judgments = qrels.for_query(qid).expect("listed query");
        let ranking = run.get(qid).unwrap_or_else(|| {
            missing_from_run.push(qid.to_string());
            &empty
        });
        let m = evaluate_query(ranking, judgments, config);
        if m.map.is_none() {
            excluded.push(qid.to_string());
        }
        per_query.insert(qid.to_string(), m);
    }
    let mut report = EvalReport {
        num_queries: per_query.len(),
        per_query,
        means: MeanMetrics::default(),
        missing_from_run,
        excluded,
    };
    report.means = MeanMetrics {
        ndcg10: report.mean_over(report.per_query.keys(), Metric::Ndcg10),
        map: report.mean_over(report.per_query.keys(), Metric::Map),
        r1000: report.mean_over(report.per_query.keys(), Metric::R1000),
    };
    Ok(report)
}

/// Paired t-test of `candidate` against `baseline` on one metric, over the
/// queries where both define it. `None` with fewer than two such queries.
pub fn compare(baseline: &EvalReport, candidate: &EvalReport, metric: Metric) -> Option<TTest> {
    let a = baseline.values(metric);
    let b = candidate.values(metric);
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(q, &x)| b.get(q).map(|&y| (x, y)))
        .unzip();
    paired_t_test(&xs, &ys).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardTopicsReport {
    pub fraction: f64,
    pub queries: Vec<String>,
    pub baseline: MeanMetrics,
    pub candidate: MeanMetrics,
    pub delta: MeanMetrics,
}

/// Compares two runs on the `fraction` of queries where the baseline's
/// NDCG@10 is lowest (ties by query id).
pub fn hard_topics(
    baseline: &EvalReport,
    candidate: &EvalReport,
    fraction: f64,
) -> Result<HardTopicsReport> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let mut shared: Vec<(&String, f64)> = baseline
        .per_query
        .iter()
        .filter(|(q, _)| candidate.per_query.contains_key(*q))
        .map(|(q, m)| (q, m.ndcg10))
        .collect();
    if shared.len() < 5 {
        return Err(Error::Config(format!(
            "hard-topic analysis needs at least 5 shared queries, found {}",
            shared.len()
        )));
    }
    shared.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let count = ((fraction * shared.len() as f64).ceil() as usize).clamp(1, shared.len());
    let queries: Vec<String> = shared[..count].iter().map(|(q, _)| (*q).clone()).collect();
    let means = |report: &EvalReport| MeanMetrics {
        ndcg10: report.mean_over(queries.iter(), Metric::Ndcg10),
        map: report.mean_over(queries.iter(), Metric::Map),
        r1000: report.mean_over(queries.iter(), Metric::R1000),
    };
    let a = means(baseline);
    let b = means(candidate);
    Ok(HardTopicsReport {
        fraction,
        delta: MeanMetrics {
            ndcg10: b.ndcg10 - a.ndcg10,
            map: b.map - a.map,
            r1000: b.r1000 - a.r1000,
        },
        baseline: a,
        candidate: b,
        queries,
    })
}
