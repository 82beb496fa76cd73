//! Independent oracles and fixture builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use grf::eval::Qrels;
use grf::generation::{Subtask, Transport, TransportError};
use grf::index::Document;
use grf::pipeline::Topic;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[allow(clippy::approx_constant)]
pub mod ttest_cases {
    include!("ttest_cases.rs");

    pub fn cases() -> &'static [(&'static [f64], &'static [f64], f64, f64)] {
        CASES
    }
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// (word, expected stem) pairs from the reference vocabulary.
pub fn porter_pairs() -> Vec<(String, String)> {
    let dir = fixture_dir().join("porter");
    let voc = std::fs::read_to_string(dir.join("voc.txt")).unwrap();
    let out = std::fs::read_to_string(dir.join("output.txt")).unwrap();
    voc.lines()
        .zip(out.lines())
        .map(|(w, s)| (w.trim().to_string(), s.trim().to_string()))
        .collect()
}

/// Exhaustive BM25: scores every document directly from its token list.
/// Returns (doc id, score) for documents with a positive score, best first,
/// ties by doc id.
pub fn oracle_bm25(
    docs: &[(String, Vec<String>)],
    query: &BTreeMap<String, f64>,
    k1: f64,
    b: f64,
) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut out = Vec::new();
    for (id, tokens) in docs {
        let dl = tokens.len() as f64;
        let mut score = 0.0;
        let mut matched = false;
        for (term, w) in query {
            let tf = tokens.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            matched = true;
            let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += w * idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if matched && score > 0.0 {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    out
}

pub fn oracle_ndcg10(ranked: &[String], grades: &BTreeMap<String, u32>) -> f64 {
    let g = |d: &String| *grades.get(d).unwrap_or(&0) as f64;
    let mut dcg = 0.0;
    for (i, d) in ranked.iter().enumerate().take(10) {
        dcg += (2f64.powf(g(d)) - 1.0) / (i as f64 + 2.0).log2();
    }
    let mut ideal: Vec<f64> = grades.values().map(|&x| x as f64).collect();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut idcg = 0.0;
    for (i, x) in ideal.iter().enumerate().take(10) {
        idcg += (2f64.powf(*x) - 1.0) / (i as f64 + 2.0).log2();
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

pub fn oracle_ap(ranked: &[String], grades: &BTreeMap<String, u32>) -> Option<f64> {
    let relevant: BTreeSet<&String> = grades
        .iter()
        .filter(|(_, &g)| g >= 1)
        .map(|(d, _)| d)
        .collect();
    if relevant.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for (i, d) in ranked.iter().enumerate().take(1000) {
        if relevant.contains(d) {
            let above = ranked[..=i].iter().filter(|x| relevant.contains(x)).count();
            total += above as f64 / (i + 1) as f64;
        }
    }
    Some(total / relevant.len() as f64)
}

pub fn oracle_recall1000(ranked: &[String], grades: &BTreeMap<String, u32>) -> Option<f64> {
    let relevant: BTreeSet<&String> = grades
        .iter()
        .filter(|(_, &g)| g >= 1)
        .map(|(d, _)| d)
        .collect();
    if relevant.is_empty() {
        return None;
    }
    let top: BTreeSet<&String> = ranked.iter().take(1000).collect();
    Some(relevant.intersection(&top).count() as f64 / relevant.len() as f64)
}

/// Counts every call; always refuses. Any non-zero count means some code
/// path tried to reach the network.
#[derive(Default)]
pub struct CountingTransport {
    pub calls: AtomicUsize,
}

impl CountingTransport {
    pub fn count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for CountingTransport {
    fn post_json(
        &self,
        _url: &str,
        _bearer: Option<&str>,
        _body: &Value,
    ) -> Result<Value, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportError {
            retryable: false,
            message: "network disabled in tests".into(),
        })
    }
}

/// A corpus where first-pass retrieval is poor by construction.
///
/// Per query: two query terms; 8 relevant documents written only in a
/// topic's "core" vocabulary; 2 relevant documents holding one query term
/// plus "rare" topic words; 15 distractors that repeat the query terms
/// amid shared noise words. Generated text is drawn from the core
/// vocabulary.
pub struct Synthetic {
    pub docs: Vec<Document>,
    pub topics: Vec<Topic>,
    pub qrels: Qrels,
    /// query id → subtask → generated text
    pub generations: BTreeMap<String, BTreeMap<Subtask, String>>,
}

pub const SYN_QUERIES: usize = 20;
pub const SYN_CORE_RELEVANT: usize = 8;
pub const SYN_RARE_RELEVANT: usize = 2;
pub const SYN_DISTRACTORS: usize = 15;

fn sample(rng: &mut ChaCha8Rng, vocab: &[String], n: usize) -> Vec<String> {
    (0..n).map(|_| vocab.choose(rng).unwrap().clone()).collect()
}

pub fn synthetic(seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<String> = (0..200).map(|i| format!("noisew{i}")).collect();
    let mut docs = Vec::new();
    let mut topics = Vec::new();
    let mut qrels = Qrels::new();
    let mut generations = BTreeMap::new();
    for q in 0..SYN_QUERIES {
        let qid = format!("{}", 300 + q);
        let query_terms: Vec<String> = (0..2).map(|i| format!("qterm{q}x{i}")).collect();
        let core: Vec<String> = (0..30).map(|i| format!("topic{q}c{i}")).collect();
        let rare: Vec<String> = (0..10).map(|i| format!("topic{q}r{i}")).collect();
        topics.push(Topic {
            id: qid.clone(),
            text: query_terms.join(" "),
        });
        for i in 0..SYN_CORE_RELEVANT {
            let id = format!("q{q}-rel{i}");
            docs.push(Document::new(&id, sample(&mut rng, &core, 40).join(" ")));
            qrels.insert(&qid, &id, 1);
        }
        for i in 0..SYN_RARE_RELEVANT {
            let id = format!("q{q}-rare{i}");
            let mut words = sample(&mut rng, &rare, 30);
            words.push(query_terms[i % 2].clone());
            words.shuffle(&mut rng);
            docs.push(Document::new(&id, words.join(" ")));
            qrels.insert(&qid, &id, 1);
        }
        for i in 0..SYN_DISTRACTORS {
            let id = format!("q{q}-dis{i:02}");
            let mut words = sample(&mut rng, &noise, 30);
            for t in &query_terms {
                for _ in 0..rng.gen_range(2..=5) {
                    words.push(t.clone());
                }
            }
            words.shuffle(&mut rng);
            docs.push(Document::new(&id, words.join(" ")));
            qrels.insert(&qid, &id, 0);
        }
        let texts = Subtask::ALL
            .iter()
            .map(|&s| (s, sample(&mut rng, &core, 60).join(" ")))
            .collect();
        generations.insert(qid, texts);
    }
    Synthetic {
        docs,
        topics,
        qrels,
        generations,
    }
}

/// Writes `{text, params, created_at}` fixture files under `dir`.
pub fn write_fixtures(dir: &Path, generations: &BTreeMap<String, BTreeMap<Subtask, String>>) {
    for (qid, texts) in generations {
        let qdir = dir.join(qid);
        std::fs::create_dir_all(&qdir).unwrap();
        for (subtask, text) in texts {
            let body = json!({
                "text": text,
                "params": {"temperature": 0.7, "top_p": 1.0},
                "created_at": "2024-01-01T00:00:00Z",
            });
            std::fs::write(
                qdir.join(format!("{subtask}.json")),
                serde_json::to_vec(&body).unwrap(),
            )
            .unwrap();
        }
    }
}
