//! Grid search and k-fold cross-validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, MeanMetrics, Metric, Qrels, RunFile};

/// Seed used when none is configured.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Named parameter axes; points are enumerated with the first axis
/// outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

/// `start, start+step, …` up to and including `stop` (within rounding).
/// Values are rounded to 10 decimals so `0.1 + 0.2` prints as `0.3`.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "step must be positive");
    let n = ((stop - start) / step + 1e-9).floor() as i64;
    (0..=n.max(-1))
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect()
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("grid has no axes".into()));
        }
        let mut seen = BTreeSet::new();
        for axis in &axes {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("grid axis `{}` is empty", axis.name)));
            }
            if !seen.insert(axis.name.as_str()) {
                return Err(Error::Config(format!(
                    "grid axis `{}` declared twice",
                    axis.name
                )));
            }
        }
        Ok(Self { axes })
    }

    pub fn builder() -> GridBuilder {
        GridBuilder { axes: Vec::new() }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points in iteration order.
    pub fn points(&self) -> Vec<Assignment> {
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; self.axes.len()];
        loop {
            out.push(Assignment {
                values: self
                    .axes
                    .iter()
                    .zip(&idx)
                    .map(|(a, &i)| (a.name.clone(), a.values[i]))
                    .collect(),
            });
            // odometer, last axis fastest
            let mut k = self.axes.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.axes[k].values.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Per-axis arithmetic mean of `assignments`, snapped to the nearest
    /// value on that axis (ties toward the smaller value).
    pub fn snap_mean(&self, assignments: &[Assignment]) -> Result<Assignment> {
        if assignments.is_empty() {
            return Err(Error::Config("cannot average zero assignments".into()));
        }
        let values = self
            .axes
            .iter()
            .map(|axis| {
                let mean = assignments
                    .iter()
                    .map(|a| a.get(&axis.name).unwrap_or(f64::NAN))
                    .sum::<f64>()
                    / assignments.len() as f64;
                let mut best = axis.values[0];
                for &v in &axis.values[1..] {
                    let (dv, db) = ((v - mean).abs(), (best - mean).abs());
                    if dv < db - 1e-12 || ((dv - db).abs() <= 1e-12 && v < best) {
                        best = v;
                    }
                }
                (axis.name.clone(), best)
            })
            .collect();
        Ok(Assignment { values })
    }

    /// BM25: k1 0.1–4.9 step 0.2, b 0.1–1.0 step 0.1.
    pub fn bm25_default() -> Self {
        Self::builder()
            .axis("k1", linspace_step(0.1, 5.0, 0.2))
            .axis("b", linspace_step(0.1, 1.0, 0.1))
            .build()
            .expect("static grid")
    }

    /// RM3: fb_terms 5–95 step 5, fb_docs 5–50 step 5, weight 0.2–0.8 step 0.1.
    pub fn rm3_default() -> Self {
        Self::builder()
            .axis("fb_terms", linspace_step(5.0, 95.0, 5.0))
            .axis("fb_docs", linspace_step(5.0, 50.0, 5.0))
            .axis("original_query_weight", linspace_step(0.2, 0.8, 0.1))
            .build()
            .expect("static grid")
    }

    /// Generative feedback: θ 10–100 step 10, β 0.1–0.9 step 0.1.
    pub fn grf_default() -> Self {
        Self::builder()
            .axis("theta", linspace_step(10.0, 100.0, 10.0))
            .axis("beta", linspace_step(0.1, 0.9, 0.1))
            .build()
            .expect("static grid")
    }
}

pub struct GridBuilder {
    axes: Vec<Axis>,
}

impl GridBuilder {
    pub fn axis(mut self, name: &str, values: Vec<f64>) -> Self {
        self.axes.push(Axis {
            name: name.to_string(),
            values,
        });
        self
    }

    pub fn build(self) -> Result<Grid> {
        Grid::new(self.axes)
    }
}

/// One grid point: parameter name → value, in axis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<(String, f64)>,
}

impl Assignment {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name)
            .ok_or_else(|| Error::Config(format!("parameter `{name}` missing from assignment")))
    }

    pub fn require_usize(&self, name: &str) -> Result<usize> {
        let v = self.require(name)?;
        if v < 0.0 || v.fract().abs() > 1e-9 {
            return Err(Error::Config(format!(
                "parameter `{name}` must be a whole number, got {v}"
            )));
        }
        Ok(v.round() as usize)
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Assignment,
    pub best_score: f64,
    /// Objective per point in grid order; `None` where evaluation failed.
    pub scores: Vec<(Assignment, Option<f64>)>,
}

/// Exhaustively evaluates `grid` on `train_queries` and returns the point
/// maximizing `objective`. Ties go to the earliest point in grid order;
/// failing points are skipped.
pub fn grid_search<F>(
    evaluator: F,
    grid: &Grid,
    objective: Metric,
    train_queries: &[String],
) -> Result<GridSearchResult>
where
    F: Fn(&Assignment, &[String]) -> Result<MeanMetrics> + Sync,
{
    if train_queries.is_empty() {
        return Err(Error::Config(
            "grid search needs at least one training query".into(),
        ));
    }
    let points = grid.points();
    let scores: Vec<(Assignment, Option<f64>)> = points
        .into_par_iter()
        .map(|point| {
            let score = match evaluator(&point, train_queries) {
                Ok(m) if m.get(objective).is_finite() => Some(m.get(objective)),
                Ok(_) => {
                    log::warn!("grid point {point} produced a non-finite objective; skipped");
                    None
                }
                Err(e) => {
                    log::warn!("grid point {point} failed: {e}; skipped");
                    None
                }
            };
            (point, score)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, score)) in scores.iter().enumerate() {
        if let Some(s) = *score {
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (i, best_score) = best.ok_or(Error::AllGridPointsFailed)?;
    Ok(GridSearchResult {
        best: scores[i].0.clone(),
        best_score,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub folds: Vec<Fold>,
}

impl FoldSpec {
    pub fn new(folds: Vec<Fold>) -> Result<Self> {
        let spec = Self { folds };
        spec.validate()?;
        Ok(spec)
    }

    /// Test sets must be disjoint and each fold's train/test non-empty and
    /// disjoint.
    pub fn validate(&self) -> Result<()> {
        if self.folds.is_empty() {
            return Err(Error::Config("fold specification has no folds".into()));
        }
        let mut seen_test = BTreeSet::new();
        for (i, fold) in self.folds.iter().enumerate() {
            if fold.train.is_empty() || fold.test.is_empty() {
                return Err(Error::Config(format!(
                    "fold {i} has an empty train or test set"
                )));
            }
            let train: BTreeSet<&str> = fold.train.iter().map(String::as_str).collect();
            if let Some(q) = fold.test.iter().find(|q| train.contains(q.as_str())) {
                return Err(Error::Config(format!(
                    "fold {i}: query `{q}` is in both train and test"
                )));
            }
            for q in &fold.test {
                if !seen_test.insert(q.as_str()) {
                    return Err(Error::Config(format!(
                        "query `{q}` appears in more than one test set"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Shuffles `query_ids` with a seeded RNG and cuts them into `k` test
    /// sets of near-equal size.
    pub fn k_fold(query_ids: &[String], k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > query_ids.len() {
            return Err(Error::Config(format!(
                "cannot split {} queries into {k} folds",
                query_ids.len()
            )));
        }
        let mut ids: Vec<String> = query_ids.to_vec();
        ids.sort();
        ids.dedup();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let folds = (0..k)
            .map(|f| {
                let test: Vec<String> = ids.iter().skip(f).step_by(k).cloned().collect();
                let train: Vec<String> =
                    ids.iter().filter(|q| !test.contains(q)).cloned().collect();
                Fold { train, test }
            })
            .collect();
        Self::new(folds)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let spec: FoldSpec = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::Schema(e.to_string()))?;
        crate::fsutil::write_atomic(path, &json)
    }
}

/// Qrels restricted to a query subset.
pub fn restrict_qrels(qrels: &Qrels, queries: &[String]) -> Qrels {
    let mut out = Qrels::new();
    for q in queries {
        if let Some(j) = qrels.for_query(q) {
            for (doc, &grade) in j {
                out.insert(q, doc, grade as i64);
            }
        }
    }
    out
}

/// Mean metrics of a run over `queries`, or all zeros when none of them
/// are judged.
pub fn evaluate_on(
    run: &RunFile,
    qrels: &Qrels,
    queries: &[String],
    config: EvalConfig,
) -> Result<MeanMetrics> {
    let subset = restrict_qrels(qrels, queries);
    if subset.num_queries() == 0 {
        return Err(Error::NoSharedQueries);
    }
    match evaluate(run, &subset, config) {
        Ok(report) => Ok(report.means),
        Err(Error::NoSharedQueries) => Ok(MeanMetrics::default()),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub best: Assignment,
    pub train_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub per_fold_best: Vec<FoldOutcome>,
    pub merged_test_run: RunFile,
    pub transfer_params: Assignment,
}

impl TuneResult {
    pub fn summary(&self) -> BTreeMap<String, serde_json::Value> {
        let mut out = BTreeMap::new();
        out.insert(
            "per_fold_best".into(),
            serde_json::to_value(&self.per_fold_best).unwrap(),
        );
        out.insert(
            "transfer_params".into(),
            serde_json::to_value(&self.transfer_params).unwrap(),
        );
        out
    }
}

/// Tunes on each fold's training queries, runs the winner on its test
/// queries, and merges the test rankings into one run.
pub fn cross_validate<R>(
    runner: R,
    qrels: &Qrels,
    eval_config: EvalConfig,
    grid: &Grid,
    folds: &FoldSpec,
    objective: Metric,
) -> Result<TuneResult>
where
    R: Fn(&Assignment, &[String]) -> Result<RunFile> + Sync,
{
    folds.validate()?;
    let evaluator = |point: &Assignment, queries: &[String]| -> Result<MeanMetrics> {
        let run = runner(point, queries)?;
        evaluate_on(&run, qrels, queries, eval_config)
    };
    let mut merged = RunFile::default();
    let mut outcomes = Vec::with_capacity(folds.folds.len());
    for fold in &folds.folds {
        let result = grid_search(evaluator, grid, objective, &fold.train)?;
        let test_run = runner(&result.best, &fold.test)?;
        if merged.tag.is_empty() {
            merged.tag = test_run.tag.clone();
        }
        for q in &fold.test {
            let ranking = test_run
                .get(q)
                .cloned()
                .unwrap_or_else(|| crate::retrieval::Ranking::new(q.as_str()));
            merged.insert(ranking);
        }
        outcomes.push(FoldOutcome {
            best: result.best,
            train_score: result.best_score,
        });
    }
    let bests: Vec<Assignment> = outcomes.iter().map(|o| o.best.clone()).collect();
    Ok(TuneResult {
        transfer_params: grid.snap_mean(&bests)?,
        per_fold_best: outcomes,
        merged_test_run: merged,
    })
}
