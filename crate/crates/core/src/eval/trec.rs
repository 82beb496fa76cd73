//! TREC run and qrels files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::retrieval::{RankedDoc, Ranking};

/// Relevance judgments: query id → doc id → grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a judgment; a repeated pair keeps the last grade. Negative
    /// grades are stored as 0.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: i64) {
        self.judgments
            .entry(query_id.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade.max(0) as u32);
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    /// Parses the 4-column `qid iter docid grade` format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 4 {
                return Err(Error::MalformedRecord {
                    line: i + 1,
                    message: format!("expected 4 columns, found {}", fields.len()),
                });
            }
            let grade: i64 = fields[3].parse().map_err(|_| Error::MalformedRecord {
                line: i + 1,
                message: format!("invalid relevance grade `{}`", fields[3]),
            })?;
            qrels.insert(fields[0], fields[2], grade);
        }
        Ok(qrels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| with_path(e, path))
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::MalformedRecord { line, message } => Error::MalformedRecord {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// A run: one ranking per query plus a tag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    pub rankings: BTreeMap<String, Ranking>,
    pub tag: String,
    /// Non-fatal problems noticed while parsing.
    pub warnings: Vec<String>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            ..Self::default()
        }
    }

    pub fn insert(&mut self, ranking: Ranking) {
        self.rankings.insert(ranking.query_id.clone(), ranking);
    }

    pub fn get(&self, query_id: &str) -> Option<&Ranking> {
        self.rankings.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Queries whose text analyzed to nothing.
    pub fn empty_queries(&self) -> Vec<&str> {
        self.rankings
            .values()
            .filter(|r| r.empty_query)
            .map(|r| r.query_id.as_str())
            .collect()
    }

    /// Parses the 6-column `qid Q0 docid rank score tag` format. Entries are
    /// re-sorted by score (descending, ties by doc id); a rank column that
    /// disagrees with that order produces a warning, not an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut run = RunFile::default();
        let mut ranks: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |message: String| Error::MalformedRecord {
                line: i + 1,
                message,
            };
            if fields.len() != 6 {
                return Err(err(format!("expected 6 columns, found {}", fields.len())));
            }
            let rank: usize = fields[3]
                .parse()
                .map_err(|_| err(format!("invalid rank `{}`", fields[3])))?;
            let score: f64 = fields[4]
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| err(format!("invalid score `{}`", fields[4])))?;
            if run.tag.is_empty() {
                run.tag = fields[5].to_string();
            }
            let ranking = run
                .rankings
                .entry(fields[0].to_string())
                .or_insert_with(|| Ranking::new(fields[0]));
            if ranking.entries.iter().any(|e| e.doc_id == fields[2]) {
                return Err(err(format!(
                    "duplicate document `{}` for query `{}`",
                    fields[2], fields[0]
                )));
            }
            ranks
                .entry(fields[0].to_string())
                .or_default()
                .push((ranking.entries.len(), rank));
            ranking.entries.push(RankedDoc {
                doc_id: fields[2].to_string(),
                score,
            });
        }
        for (qid, ranking) in run.rankings.iter_mut() {
            let file_order: Vec<String> = {
                let mut by_rank = ranks[qid].clone();
                by_rank.sort_by_key(|&(pos, rank)| (rank, pos));
                by_rank
                    .iter()
                    .map(|&(pos, _)| ranking.entries[pos].doc_id.clone())
                    .collect()
            };
            ranking.sort();
            if !ranking.doc_ids().eq(file_order.iter().map(String::as_str)) {
                run.warnings.push(format!(
                    "query {qid}: rank column disagrees with scores; scores used"
                ));
            }
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let run = Self::parse(&text).map_err(|e| with_path(e, path))?;
        for w in &run.warnings {
            log::warn!("{}: {w}", path.display());
        }
        Ok(run)
    }

    pub fn to_trec_string(&self) -> String {
        let tag = if self.tag.is_empty() {
            "run"
        } else {
            &self.tag
        };
        let mut out = String::new();
        for ranking in self.rankings.values() {
            for (i, e) in ranking.entries.iter().enumerate() {
                // 17 significant digits round-trip an f64 exactly.
                writeln!(
                    out,
                    "{} Q0 {} {} {:.16e} {}",
                    ranking.query_id,
                    e.doc_id,
                    i + 1,
                    e.score,
                    tag
                )
                .unwrap();
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_trec_string().as_bytes())
    }
}
