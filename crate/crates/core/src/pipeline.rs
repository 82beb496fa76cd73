//! Batch retrieval over a topic set: BM25, RM3 and generative feedback runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::RunFile;
use crate::feedback::{
    concat_generations, grf_distribution_with_origin, rm3_distribution, to_weighted_query,
    FeedbackModel, FeedbackOrigin, FeedbackRecord, GrfParams, Rm3Params,
};
use crate::generation::{GenerationBundle, GenerationCache, Subtask, SubtaskSelection};
use crate::index::InvertedIndex;
use crate::retrieval::{parse_plain_query, search, Bm25Params, Ranking, DEFAULT_DEPTH};
use crate::textproc::AnalyzerConfig;
use crate::tuner::Assignment;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub id: String,
    pub text: String,
}

/// Parses `qid<TAB>text` lines. Blank lines are skipped; ids must be unique.
pub fn parse_topics(text: &str) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::MalformedRecord {
                line: i + 1,
                message: "expected `qid<TAB>text`".into(),
            })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::MissingField {
                line: i + 1,
                field: "qid",
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::MalformedRecord {
                line: i + 1,
                message: format!("duplicate topic id `{id}`"),
            });
        }
        topics.push(Topic {
            id: id.to_string(),
            text: body.trim().to_string(),
        });
    }
    Ok(topics)
}

pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_topics(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bm25,
    Rm3,
    Grf,
    /// Generative feedback from a single subtask's text.
    GrfSubtask(Subtask),
}

impl Method {
    pub fn needs_generations(self) -> bool {
        matches!(self, Method::Grf | Method::GrfSubtask(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Bm25 => f.write_str("bm25"),
            Method::Rm3 => f.write_str("rm3"),
            Method::Grf => f.write_str("grf"),
            Method::GrfSubtask(s) => write!(f, "grf:{s}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(Method::Bm25),
            "rm3" => Ok(Method::Rm3),
            "grf" => Ok(Method::Grf),
            _ => match s.strip_prefix("grf:") {
                Some(name) => Ok(Method::GrfSubtask(name.parse()?)),
                None => Err(Error::Config(format!(
                    "unknown method `{s}` (expected bm25, rm3, grf or grf:<subtask>)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub bm25: Bm25Params,
    pub rm3: Rm3Params,
    pub grf: GrfParams,
    /// Subtasks concatenated for `Method::Grf`.
    pub subtasks: SubtaskSelection,
    pub depth: usize,
    /// Abort instead of skipping queries without generations.
    pub strict: bool,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            bm25: Bm25Params::default(),
            rm3: Rm3Params::default(),
            grf: GrfParams {
                beta: 0.5,
                theta: 100,
            },
            subtasks: SubtaskSelection::All,
            depth: DEFAULT_DEPTH,
            strict: false,
        }
    }

    /// Copies any recognised parameter from a grid point.
    pub fn apply(&self, point: &Assignment) -> Result<Self> {
        let mut out = self.clone();
        for (name, value) in &point.values {
            match name.as_str() {
                "k1" => out.bm25.k1 = *value,
                "b" => out.bm25.b = *value,
                "fb_docs" => out.rm3.fb_docs = point.require_usize(name)?,
                "fb_terms" => out.rm3.fb_terms = point.require_usize(name)?,
                "original_query_weight" => out.rm3.original_query_weight = *value,
                "beta" => out.grf.beta = *value,
                "theta" => out.grf.theta = point.require_usize(name)?,
                other => return Err(Error::Config(format!("unknown tuning parameter `{other}`"))),
            }
        }
        Ok(out)
    }

    fn selection(&self) -> SubtaskSelection {
        match self.method {
            Method::GrfSubtask(s) => SubtaskSelection::Only(vec![s]),
            _ => self.subtasks.clone(),
        }
    }

    fn origin(&self) -> FeedbackOrigin {
        match self.method {
            Method::GrfSubtask(s) => FeedbackOrigin::GrfSubtask(s),
            Method::Rm3 => FeedbackOrigin::Rm3,
            _ => FeedbackOrigin::Grf,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub run: RunFile,
    pub feedback: Vec<FeedbackRecord>,
    /// Queries left out because their generations were missing.
    pub skipped: Vec<String>,
}

/// Loads every topic's generation bundle from `dir`. Topics without one are
/// simply absent from the map.
pub fn load_generations(
    dir: &Path,
    topics: &[Topic],
) -> Result<BTreeMap<String, GenerationBundle>> {
    let cache = GenerationCache::new(dir);
    let mut out = BTreeMap::new();
    for topic in topics {
        match cache.load_bundle(&topic.id, &topic.text) {
            Ok(bundle) => {
                out.insert(topic.id.clone(), bundle);
            }
            Err(Error::Schema(msg)) if msg.starts_with("no generations") => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// The generative feedback model for one query. Depends only on the query
/// text, the bundle, the analyzer and the parameters.
pub fn grf_feedback_model(
    query_text: &str,
    bundle: &GenerationBundle,
    selection: &SubtaskSelection,
    analyzer: &AnalyzerConfig,
    params: GrfParams,
    origin: FeedbackOrigin,
) -> Result<FeedbackModel> {
    let query = parse_plain_query(query_text, analyzer);
    let generated = concat_generations(bundle, selection, analyzer)?;
    grf_distribution_with_origin(&query, &generated, params, origin)
}

enum QueryOutcome {
    Ranked(Ranking, Option<FeedbackModel>),
    Skipped,
}

fn run_one(
    index: &InvertedIndex,
    topic: &Topic,
    config: &RunConfig,
    bundles: &BTreeMap<String, GenerationBundle>,
) -> Result<QueryOutcome> {
    let analyzer = index.analyzer();
    let query = parse_plain_query(&topic.text, analyzer);
    match config.method {
        Method::Bm25 => Ok(QueryOutcome::Ranked(
            search(index, &topic.id, &query, config.bm25, config.depth)?,
            None,
        )),
        Method::Rm3 => {
            if query.is_empty() {
                return Ok(QueryOutcome::Ranked(
                    search(index, &topic.id, &query, config.bm25, config.depth)?,
                    None,
                ));
            }
            let first = search(
                index,
                &topic.id,
                &query,
                config.bm25,
                config.depth.max(config.rm3.fb_docs),
            )?;
            let model = rm3_distribution(&query, &first, index, config.rm3)?;
            let expanded = to_weighted_query(&model)?;
            let ranking = search(index, &topic.id, &expanded, config.bm25, config.depth)?;
            Ok(QueryOutcome::Ranked(ranking, Some(model)))
        }
        Method::Grf | Method::GrfSubtask(_) => {
            let Some(bundle) = bundles.get(&topic.id) else {
                if config.strict {
                    return Err(Error::Config(format!(
                        "no generations for query `{}`",
                        topic.id
                    )));
                }
                return Ok(QueryOutcome::Skipped);
            };
            let model = match grf_feedback_model(
                &topic.text,
                bundle,
                &config.selection(),
                analyzer,
                config.grf,
                config.origin(),
            ) {
                Err(Error::MissingSubtask(name)) if !config.strict => {
                    log::warn!(
                        "query {}: subtask {name} missing from bundle; skipped",
                        topic.id
                    );
                    return Ok(QueryOutcome::Skipped);
                }
                other => other?,
            };
            let expanded = to_weighted_query(&model)?;
            let ranking = search(index, &topic.id, &expanded, config.bm25, config.depth)?;
            Ok(QueryOutcome::Ranked(ranking, Some(model)))
        }
    }
}

/// Runs every topic through `config.method` in parallel. The run is tagged
/// with the method name.
pub fn run_topics(
    index: &InvertedIndex,
    topics: &[Topic],
    config: &RunConfig,
    bundles: &BTreeMap<String, GenerationBundle>,
) -> Result<RunOutput> {
    if config.depth == 0 {
        return Err(Error::Contract("run depth must be >= 1".into()));
    }
    if config.method == Method::Rm3 && !index.has_doc_vectors() {
        return Err(Error::MissingDocVectors);
    }
    let outcomes: Vec<(usize, QueryOutcome)> = topics
        .par_iter()
        .enumerate()
        .map(|(i, topic)| run_one(index, topic, config, bundles).map(|o| (i, o)))
        .collect::<Result<_>>()?;
    let mut output = RunOutput {
        run: RunFile::new(config.method.to_string()),
        feedback: Vec::new(),
        skipped: Vec::new(),
    };
    for (i, outcome) in outcomes {
        let topic = &topics[i];
        match outcome {
            QueryOutcome::Ranked(ranking, model) => {
                if let Some(model) = model {
                    output.feedback.push(model.to_record(&topic.id));
                }
                output.run.insert(ranking);
            }
            QueryOutcome::Skipped => {
                log::warn!("query {}: no generations; skipped", topic.id);
                output.skipped.push(topic.id.clone());
            }
        }
    }
    Ok(output)
}

/// A closure suitable for [`crate::tuner::cross_validate`]: runs the given
/// query ids with `base` overridden by the grid point.
pub fn tuning_runner<'a>(
    index: &'a InvertedIndex,
    topics: &'a [Topic],
    base: &'a RunConfig,
    bundles: &'a BTreeMap<String, GenerationBundle>,
) -> impl Fn(&Assignment, &[String]) -> Result<RunFile> + Sync + 'a {
    let by_id: BTreeMap<&str, &Topic> = topics.iter().map(|t| (t.id.as_str(), t)).collect();
    move |point, queries| {
        let config = point_config(base, point)?;
        let subset: Vec<Topic> = queries
            .iter()
            .map(|q| {
                by_id
                    .get(q.as_str())
                    .map(|t| (*t).clone())
                    .ok_or_else(|| Error::Config(format!("query `{q}` is not in the topics file")))
            })
            .collect::<Result<_>>()?;
        // Grid points already run in parallel; keep per-query work serial.
        let mut run = RunFile::new(config.method.to_string());
        for topic in &subset {
            match run_one(index, topic, &config, bundles)? {
                QueryOutcome::Ranked(r, _) => run.insert(r),
                QueryOutcome::Skipped => {}
            }
        }
        Ok(run)
    }
}

fn point_config(base: &RunConfig, point: &Assignment) -> Result<RunConfig> {
    let config = base.apply(point)?;
    config.bm25.validate()?;
    config.rm3.validate()?;
    config.grf.validate()?;
    Ok(config)
}
