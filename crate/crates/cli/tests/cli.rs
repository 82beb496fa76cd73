use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SUBTASKS: [&str; 10] = [
    "keywords",
    "entities",
    "cot_keywords",
    "cot_entities",
    "queries",
    "summary",
    "facts",
    "document",
    "essay",
    "news",
];

fn grf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grf"))
        .current_dir(dir)
        .env_remove("GRF_API_KEY")
        .args(args)
        .output()
        .expect("spawn grf")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(
        o.status.code(),
        Some(0),
        "stdout:\n{}\nstderr:\n{}",
        stdout(&o),
        stderr(&o)
    );
    o
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    /// Two-document toy corpus, two topics, fixtures for every subtask.
    fn toy() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.write(
            "corpus.jsonl",
            "{\"id\":\"d1\",\"contents\":\"apple banana apple\"}\n{\"id\":\"d2\",\"contents\":\"banana cherry\"}\n",
        );
        ws.write("topics.tsv", "q1\tapple\nq2\tbanana cherry\n");
        ws.write("qrels.txt", "q1 0 d1 1\nq2 0 d2 2\nq2 0 d1 0\n");
        ws.fixtures("fx", &["q1", "q2"], "cherry banana banana");
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, body: &str) {
        let p = self.path(name);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, body).unwrap();
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn fixtures(&self, dir: &str, qids: &[&str], text: &str) {
        for q in qids {
            for s in SUBTASKS {
                self.write(
                    &format!("{dir}/{q}/{s}.json"),
                    &serde_json::json!({"text": text, "params": {"temperature": 0.7}, "created_at": "2024-01-01T00:00:00Z"})
                        .to_string(),
                );
            }
        }
    }

    fn run(&self, args: &[&str]) -> Output {
        grf(self.dir.path(), args)
    }

    fn index(&self) {
        ok(self.run(&["index", "--corpus", "corpus.jsonl", "--out", "index.json"]));
    }

    fn generate(&self) {
        ok(self.run(&[
            "generate",
            "--topics",
            "topics.tsv",
            "--subtasks",
            "all",
            "--out",
            "gen",
            "--fixtures",
            "fx",
        ]));
    }
}

/// (qid, docid, score) triples, tag column dropped.
fn ranked(run: &str) -> Vec<(String, String, f64)> {
    run.lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].to_string(), f[2].to_string(), f[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn index_reports_document_count() {
    let ws = Workspace::toy();
    ws.write(
        "three.jsonl",
        "{\"id\":\"a\",\"contents\":\"x\"}\n{\"id\":\"b\",\"contents\":\"y\"}\n{\"id\":\"c\",\"contents\":\"z\"}\n",
    );
    let out = ok(ws.run(&["index", "--corpus", "three.jsonl", "--out", "i.json"]));
    assert!(stdout(&out).contains("num_docs=3"));
    let out = ok(ws.run(&[
        "--json",
        "index",
        "--corpus",
        "three.jsonl",
        "--out",
        "i.json",
    ]));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["num_docs"], 3);
}

#[test]
fn index_input_errors_exit_2() {
    let ws = Workspace::toy();
    let out = ws.run(&["index", "--corpus", "missing.jsonl", "--out", "i.json"]);
    assert_eq!(out.status.code(), Some(2));
    ws.write(
        "dup.jsonl",
        "{\"id\":\"same\",\"contents\":\"x\"}\n{\"id\":\"same\",\"contents\":\"y\"}\n",
    );
    let out = ws.run(&["index", "--corpus", "dup.jsonl", "--out", "i.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("same"));
    assert!(!ws.path("i.json").exists());
}

#[test]
fn usage_errors_exit_2() {
    let ws = Workspace::toy();
    assert_eq!(ws.run(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(ws.run(&["frobnicate"]).status.code(), Some(2));
    ws.index();
    let out = ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "bm42",
        "--out",
        "r",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bm25_run_matches_hand_oracle() {
    let ws = Workspace::toy();
    ws.index();
    ok(ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "bm25",
        "--out",
        "bm25.run",
    ]));
    let run = ws.read("bm25.run");
    assert!(run.lines().all(|l| l.ends_with(" bm25")));
    // d1: len 3, d2: len 2, avgdl 2.5, k1 0.9, b 0.4
    let idf = |df: f64| (1.0 + (2.0 - df + 0.5) / (df + 0.5)).ln();
    let part = |tf: f64, dl: f64| tf * 1.9 / (tf + 0.9 * (0.6 + 0.4 * dl / 2.5));
    let q1_d1 = idf(1.0) * part(2.0, 3.0);
    // query model for "banana cherry" weighs each term 0.5
    let q2_d2 = 0.5 * idf(2.0) * part(1.0, 2.0) + 0.5 * idf(1.0) * part(1.0, 2.0);
    let q2_d1 = 0.5 * idf(2.0) * part(1.0, 3.0);
    let got = ranked(&run);
    let want = [
        ("q1", "d1", q1_d1),
        ("q2", "d2", q2_d2),
        ("q2", "d1", q2_d1),
    ];
    assert_eq!(got.len(), want.len());
    for ((q, d, s), (wq, wd, ws)) in got.iter().zip(want) {
        assert_eq!((q.as_str(), d.as_str()), (wq, wd));
        assert!((s - ws).abs() < 1e-9, "{q} {d}: {s} vs {ws}");
    }
}

#[test]
fn grf_beta_one_equals_bm25() {
    let ws = Workspace::toy();
    ws.index();
    ws.generate();
    ok(ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "bm25",
        "--out",
        "bm25.run",
    ]));
    ok(ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "grf",
        "--generations",
        "gen",
        "--beta",
        "1",
        "--out",
        "grf.run",
    ]));
    assert_eq!(ranked(&ws.read("grf.run")), ranked(&ws.read("bm25.run")));
}

#[test]
fn grf_on_empty_generations_fails() {
    let ws = Workspace::toy();
    ws.index();
    ws.fixtures("empty", &["q1", "q2"], "");
    ok(ws.run(&[
        "generate",
        "--topics",
        "topics.tsv",
        "--out",
        "gen",
        "--fixtures",
        "empty",
    ]));
    let out = ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "grf",
        "--generations",
        "gen",
        "--beta",
        "0.5",
        "--out",
        "grf.run",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("empty feedback text"));
}

#[test]
fn missing_generations_skip_or_abort() {
    let ws = Workspace::toy();
    ws.index();
    ws.fixtures("partial", &["q1"], "banana");
    ok(ws.run(&[
        "generate",
        "--topics",
        "topics.tsv",
        "--out",
        "gen",
        "--fixtures",
        "partial",
    ]));
    let args = [
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "grf",
        "--generations",
        "gen",
        "--out",
        "grf.run",
    ];
    let out = ok(ws.run(&args));
    assert!(stdout(&out).contains("skipped (no generations): q2"));
    assert!(ws.read("grf.run").lines().all(|l| l.starts_with("q1 ")));
    let mut strict = vec!["--strict"];
    strict.extend(args);
    assert_ne!(ws.run(&strict).status.code(), Some(0));
}

#[test]
fn grf_feedback_ignores_index_changes() {
    let ws = Workspace::toy();
    ws.index();
    ws.generate();
    ws.write(
        "bigger.jsonl",
        "{\"id\":\"d1\",\"contents\":\"apple banana apple\"}\n{\"id\":\"d2\",\"contents\":\"banana cherry\"}\n{\"id\":\"d9\",\"contents\":\"cherry cherry apple\"}\n",
    );
    ok(ws.run(&["index", "--corpus", "bigger.jsonl", "--out", "bigger.json"]));
    for (idx, fb) in [("index.json", "a.json"), ("bigger.json", "b.json")] {
        ok(ws.run(&[
            "run",
            "--index",
            idx,
            "--topics",
            "topics.tsv",
            "--method",
            "grf",
            "--generations",
            "gen",
            "--out",
            "x.run",
            "--feedback-out",
            fb,
        ]));
    }
    assert_eq!(ws.read("a.json"), ws.read("b.json"));
}

#[test]
fn rm3_and_single_subtask_runs() {
    let ws = Workspace::toy();
    ws.index();
    ws.generate();
    ok(ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "rm3",
        "--out",
        "rm3.run",
    ]));
    assert!(ws.read("rm3.run").lines().all(|l| l.ends_with(" rm3")));
    ok(ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "grf:news",
        "--generations",
        "gen",
        "--out",
        "news.run",
    ]));
    assert!(ws
        .read("news.run")
        .lines()
        .all(|l| l.ends_with(" grf:news")));
    ok(ws.run(&[
        "index",
        "--corpus",
        "corpus.jsonl",
        "--out",
        "novec.json",
        "--no-doc-vectors",
    ]));
    let out = ws.run(&[
        "run",
        "--index",
        "novec.json",
        "--topics",
        "topics.tsv",
        "--method",
        "rm3",
        "--out",
        "r",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_is_repeatable_and_validates_subtasks() {
    let ws = Workspace::toy();
    ws.generate();
    let first = ws.read("gen/q1/news.json");
    ws.generate();
    assert_eq!(ws.read("gen/q1/news.json"), first);
    let out = ws.run(&[
        "generate",
        "--topics",
        "topics.tsv",
        "--subtasks",
        "poem",
        "--out",
        "g2",
        "--fixtures",
        "fx",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("keywords"));
    let out = ws.run(&[
        "generate",
        "--topics",
        "topics.tsv",
        "--out",
        "g3",
        "--live",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("GRF_API_KEY"));
}

/// Four queries with one relevant document each; `good` ranks it first,
/// `bad` ranks it second (or not at all).
fn eval_workspace() -> Workspace {
    let ws = Workspace::toy();
    let mut qrels = String::new();
    let mut good = String::new();
    let mut bad = String::new();
    for q in 1..=6 {
        qrels.push_str(&format!("q{q} 0 rel{q} 1\n"));
        good.push_str(&format!(
            "q{q} Q0 rel{q} 1 2.0 good\nq{q} Q0 junk{q} 2 1.0 good\n"
        ));
        bad.push_str(&format!("q{q} Q0 junk{q} 1 2.0 bad\n"));
        if q % 2 == 0 {
            bad.push_str(&format!("q{q} Q0 rel{q} 2 1.0 bad\n"));
        }
    }
    ws.write("e.qrels", &qrels);
    ws.write("good.run", &good);
    ws.write("bad.run", &bad);
    ws
}

#[test]
fn eval_self_comparison_has_no_markers() {
    let ws = eval_workspace();
    let out = ok(ws.run(&[
        "eval",
        "--run",
        "good.run",
        "--qrels",
        "e.qrels",
        "--baseline",
        "good.run",
    ]));
    let text = stdout(&out);
    let row = text.lines().find(|l| l.starts_with("run")).unwrap();
    assert!(!row.contains('+'), "{text}");
    assert!(text.starts_with("# seed=42"));
}

#[test]
fn eval_marks_significant_improvement() {
    let ws = eval_workspace();
    let out = ok(ws.run(&[
        "eval",
        "--run",
        "good.run",
        "--qrels",
        "e.qrels",
        "--baseline",
        "bad.run",
    ]));
    let row = stdout(&out)
        .lines()
        .find(|l| l.starts_with("run"))
        .unwrap()
        .to_string();
    assert_eq!(row.matches('+').count(), 2, "{row}");

    let out = ok(ws.run(&[
        "--json",
        "eval",
        "--run",
        "good.run",
        "--qrels",
        "e.qrels",
        "--baseline",
        "bad.run",
    ]));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    // R@1k differences are (1, 0, 1, 0, 1, 0): mean 0.5, sd √0.3, t = 0.5/(√0.3/√6) = √5
    let t = v["significance"]["r1000"]["t"].as_f64().unwrap();
    assert!((t - 5f64.sqrt()).abs() < 1e-9, "t = {t}");
    assert_eq!(v["significance"]["r1000"]["improved"], false);
    // MAP differences are (1, .5, 1, .5, 1, .5): t = 0.75/(√0.075/√6) = √45
    let t = v["significance"]["map"]["t"].as_f64().unwrap();
    assert!((t - 45f64.sqrt()).abs() < 1e-9, "t = {t}");
    assert_eq!(v["seed"], 42);
}

#[test]
fn eval_without_shared_queries_exits_2() {
    let ws = eval_workspace();
    ws.write("other.qrels", "zz 0 d 1\n");
    let out = ws.run(&["eval", "--run", "good.run", "--qrels", "other.qrels"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hard_topics_reports() {
    let ws = eval_workspace();
    let out = ok(ws.run(&[
        "--json",
        "hard-topics",
        "--run-a",
        "good.run",
        "--run-b",
        "good.run",
        "--qrels",
        "e.qrels",
    ]));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["delta"]["ndcg10"], 0.0);
    assert_eq!(v["delta"]["map"], 0.0);

    let out = ok(ws.run(&[
        "--json",
        "hard-topics",
        "--run-a",
        "bad.run",
        "--run-b",
        "good.run",
        "--qrels",
        "e.qrels",
        "--fraction",
        "1.0",
    ]));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let full = |run: &str| -> Value {
        let o = ok(ws.run(&["--json", "eval", "--run", run, "--qrels", "e.qrels"]));
        serde_json::from_str::<Value>(&stdout(&o)).unwrap()["means"].clone()
    };
    let (a, b) = (full("bad.run"), full("good.run"));
    for m in ["ndcg10", "map", "r1000"] {
        let want = b[m].as_f64().unwrap() - a[m].as_f64().unwrap();
        assert!(
            (v["delta"][m].as_f64().unwrap() - want).abs() < 1e-12,
            "{m}"
        );
    }

    // Hardest 20% of six queries is two: the odd ones (NDCG@10 0) by id.
    let out = ok(ws.run(&[
        "--json",
        "hard-topics",
        "--run-a",
        "bad.run",
        "--run-b",
        "good.run",
        "--qrels",
        "e.qrels",
    ]));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["queries"], serde_json::json!(["q1", "q3"]));
    assert_eq!(v["delta"]["ndcg10"], 1.0);

    for bad in ["0", "1.5"] {
        let out = ws.run(&[
            "hard-topics",
            "--run-a",
            "bad.run",
            "--run-b",
            "good.run",
            "--qrels",
            "e.qrels",
            "--fraction",
            bad,
        ]);
        assert_eq!(out.status.code(), Some(2));
    }
}

#[test]
fn tune_bm25_with_fold_file() {
    let ws = Workspace::toy();
    ws.index();
    ws.write(
        "folds.json",
        r#"{"folds":[{"train":["q1"],"test":["q2"]},{"train":["q2"],"test":["q1"]}]}"#,
    );
    let out = ok(ws.run(&[
        "--json",
        "tune",
        "--method",
        "bm25",
        "--folds",
        "folds.json",
        "--objective",
        "r1000",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--qrels",
        "qrels.txt",
        "--out",
        "cv.run",
    ]));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["folds"], 2);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["per_fold_best"].as_array().unwrap().len(), 2);
    let qids: std::collections::BTreeSet<String> = ranked(&ws.read("cv.run"))
        .into_iter()
        .map(|r| r.0)
        .collect();
    assert_eq!(qids.into_iter().collect::<Vec<_>>(), ["q1", "q2"]);

    ws.write(
        "overlap.json",
        r#"{"folds":[{"train":["q1"],"test":["q1"]}]}"#,
    );
    let out = ws.run(&[
        "tune",
        "--method",
        "bm25",
        "--folds",
        "overlap.json",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--qrels",
        "qrels.txt",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tune_grf_flags_grid_choice() {
    let ws = Workspace::toy();
    ws.index();
    ws.generate();
    ws.write(
        "folds.json",
        r#"{"folds":[{"train":["q1"],"test":["q2"]},{"train":["q2"],"test":["q1"]}]}"#,
    );
    let out = ok(ws.run(&[
        "tune",
        "--method",
        "grf",
        "--folds",
        "folds.json",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--qrels",
        "qrels.txt",
        "--generations",
        "gen",
    ]));
    let text = stdout(&out);
    assert!(text.contains("note: theta/beta grid ranges"), "{text}");
    assert!(text.contains("transfer: theta="), "{text}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let ws = Workspace::toy();
    ws.index();
    ws.write(
        "exp.toml",
        "method = \"bm25\"\nseed = 7\n[paths]\nindex = \"index.json\"\ntopics = \"topics.tsv\"\noutput = \"from_file.run\"\n[bm25]\nk1 = 1.2\n",
    );
    let out = ok(ws.run(&["--config", "exp.toml", "run"]));
    assert!(stdout(&out).contains("seed=7"));
    assert!(ws.path("from_file.run").exists());
    ok(ws.run(&[
        "--config", "exp.toml", "run", "--k1", "0.9", "--out", "flag.run",
    ]));
    ok(ws.run(&[
        "run",
        "--index",
        "index.json",
        "--topics",
        "topics.tsv",
        "--method",
        "bm25",
        "--out",
        "default.run",
    ]));
    assert_eq!(
        ranked(&ws.read("flag.run")),
        ranked(&ws.read("default.run"))
    );
    assert_ne!(
        ranked(&ws.read("from_file.run")),
        ranked(&ws.read("default.run"))
    );

    ws.write("bad.toml", "colour = \"blue\"\n");
    assert_eq!(
        ws.run(&["--config", "bad.toml", "run"]).status.code(),
        Some(2)
    );
}
