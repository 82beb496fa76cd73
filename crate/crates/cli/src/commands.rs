use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use grf::eval::{
    self, compare, evaluate, hard_topics, EvalConfig, EvalReport, Metric, Qrels, RunFile,
};
use grf::feedback::{GrfParams, Rm3Params};
use grf::generation::{
    build_client, generate_bundle, ClientMode, GenerationCache, GenerationParams, HttpTransport,
    SubtaskSelection, SubtaskSpec, Transport, TransportError, API_KEY_ENV,
};
use grf::index::{build_index, load_corpus_jsonl, InvertedIndex};
use grf::pipeline::{
    load_generations, load_topics, run_topics, tuning_runner, Method, RunConfig, Topic,
};
use grf::retrieval::{Bm25Params, DEFAULT_DEPTH};
use grf::textproc::{AnalyzerConfig, Stemmer};
use grf::tuner::{cross_validate, FoldSpec, Grid, DEFAULT_SEED};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{required, FileConfig};
use crate::{
    AnalyzerArgs, Cli, CliError, Command, EvalArgs, GenerateArgs, HardTopicsArgs, IndexArgs,
    RetrievalArgs, RunArgs, TuneArgs,
};

struct Ctx {
    json: bool,
    strict: bool,
    seed: u64,
    file: FileConfig,
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let ctx = Ctx {
        json: cli.json,
        strict: cli.strict || file.strict.unwrap_or(false),
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        file,
    };
    match cli.command {
        Command::Index(args) => cmd_index(&ctx, args),
        Command::Generate(args) => cmd_generate(&ctx, args),
        Command::Run(args) => cmd_run(&ctx, args),
        Command::Eval(args) => cmd_eval(&ctx, args),
        Command::Tune(args) => cmd_tune(&ctx, args),
        Command::HardTopics(args) => cmd_hard_topics(&ctx, args),
    }
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn parse<T: std::str::FromStr<Err = grf::Error>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(CliError::from)
}

fn analyzer(ctx: &Ctx, args: &AnalyzerArgs) -> Result<AnalyzerConfig, CliError> {
    let mut config = AnalyzerConfig::default();
    match args
        .stemmer
        .as_deref()
        .or(ctx.file.analyzer.stemmer.as_deref())
    {
        None | Some("porter") => {}
        Some("none") => config = config.with_stemmer(Stemmer::None),
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown stemmer `{other}` (porter or none)"
            )))
        }
    }
    if let Some(path) = args
        .stopwords
        .as_ref()
        .or(ctx.file.analyzer.stopwords.as_ref())
    {
        config = config.with_stopword_file(path)?;
    }
    Ok(config)
}

fn cmd_index(ctx: &Ctx, args: IndexArgs) -> Result<(), CliError> {
    let corpus = required(args.corpus.clone(), ctx.file.paths.corpus.clone(), "corpus")?;
    let out = required(args.out.clone(), ctx.file.paths.index.clone(), "out")?;
    let analyzer = analyzer(ctx, &args.analyzer)?;
    let index = build_index(load_corpus_jsonl(&corpus)?, &analyzer, !args.no_doc_vectors)?;
    index.save(&out)?;
    let stats = json!({
        "index": out,
        "num_docs": index.num_docs(),
        "num_terms": index.num_terms(),
        "total_tokens": index.total_tokens(),
        "avg_doc_length": index.avg_doc_length(),
        "doc_vectors": index.has_doc_vectors(),
    });
    if ctx.json {
        print_json(&stats);
    } else {
        println!(
            "indexed {} documents into {}",
            index.num_docs(),
            out.display()
        );
        println!("num_docs={}", index.num_docs());
        println!("num_terms={}", index.num_terms());
        println!("total_tokens={}", index.total_tokens());
        println!("avg_doc_length={:.2}", index.avg_doc_length());
    }
    Ok(())
}

/// Stands in for the HTTP stack in fixture mode; never expected to run.
struct NoNetwork;

impl Transport for NoNetwork {
    fn post_json(&self, url: &str, _: Option<&str>, _: &Value) -> Result<Value, TransportError> {
        Err(TransportError {
            retryable: false,
            message: format!("network disabled in fixture mode ({url})"),
        })
    }
}

fn cmd_generate(ctx: &Ctx, args: GenerateArgs) -> Result<(), CliError> {
    let topics = load_topics(&required(
        args.topics.clone(),
        ctx.file.paths.topics.clone(),
        "topics",
    )?)?;
    let out = required(args.out.clone(), ctx.file.paths.generations.clone(), "out")?;
    let selection: SubtaskSelection = parse(&args.subtasks)?;
    let g = &ctx.file.generation;
    let defaults = GenerationParams::default();
    let params = GenerationParams {
        temperature: args
            .temperature
            .or(g.temperature)
            .unwrap_or(defaults.temperature),
        top_p: args.top_p.or(g.top_p).unwrap_or(defaults.top_p),
        frequency_penalty: g.frequency_penalty.unwrap_or(defaults.frequency_penalty),
        presence_penalty: g.presence_penalty.unwrap_or(defaults.presence_penalty),
        model_id: args
            .model
            .clone()
            .or(g.model_id.clone())
            .unwrap_or(defaults.model_id),
    };
    let (mode, transport): (ClientMode, Arc<dyn Transport>) = if args.live {
        if std::env::var(API_KEY_ENV).map_or(true, |k| k.is_empty()) {
            return Err(CliError::Usage(format!(
                "--live needs {API_KEY_ENV} in the environment"
            )));
        }
        let timeout = Duration::from_secs(g.timeout_secs.unwrap_or(60));
        (ClientMode::Live, Arc::new(HttpTransport::new(timeout)?))
    } else {
        let dir = args
            .fixtures
            .clone()
            .or(ctx.file.paths.fixtures.clone())
            .ok_or_else(|| CliError::Usage("choose --live or --fixtures <dir>".into()))?;
        if !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "fixture directory {} not found",
                dir.display()
            )));
        }
        (ClientMode::Fixtures(dir), Arc::new(NoNetwork))
    };
    let client = build_client(&mode, transport);
    let cache = GenerationCache::new(&out);
    let specs: Vec<SubtaskSpec> = selection
        .resolve()
        .into_iter()
        .map(SubtaskSpec::default_for)
        .collect();
    let bundles = topics
        .par_iter()
        .map(|t| {
            generate_bundle(
                client.as_ref(),
                Some(&cache),
                &t.id,
                &t.text,
                &specs,
                &params,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let failures: Vec<Value> = bundles
        .iter()
        .flat_map(|b| {
            b.failures
                .iter()
                .map(move |(s, why)| json!({"query_id": b.query_id, "subtask": s, "error": why}))
        })
        .collect();
    let generated: usize = bundles.iter().map(|b| b.generations.len()).sum();
    if ctx.json {
        print_json(&json!({
            "seed": ctx.seed,
            "queries": topics.len(),
            "generations": generated,
            "failures": failures,
            "out": out,
        }));
    } else {
        println!("# seed={} source={:?}", ctx.seed, client.source());
        println!(
            "{} queries, {} generations written to {}",
            topics.len(),
            generated,
            out.display()
        );
        for f in &failures {
            println!(
                "failed: {} {} ({})",
                f["query_id"], f["subtask"], f["error"]
            );
        }
    }
    if !failures.is_empty() && ctx.strict {
        return Err(CliError::Internal(format!(
            "{} generations failed",
            failures.len()
        )));
    }
    Ok(())
}

struct Retrieval {
    index: InvertedIndex,
    topics: Vec<Topic>,
    config: RunConfig,
    bundles: std::collections::BTreeMap<String, grf::generation::GenerationBundle>,
}

fn retrieval(ctx: &Ctx, args: &RetrievalArgs, method: Method) -> Result<Retrieval, CliError> {
    let f = &ctx.file;
    let index = InvertedIndex::load(&required(
        args.index.clone(),
        f.paths.index.clone(),
        "index",
    )?)?;
    let topics = load_topics(&required(
        args.topics.clone(),
        f.paths.topics.clone(),
        "topics",
    )?)?;
    let mut config = RunConfig::new(method);
    config.strict = ctx.strict;
    config.depth = args.depth.or(f.depth).unwrap_or(DEFAULT_DEPTH);
    config.bm25 = Bm25Params::new(
        args.k1.or(f.bm25.k1).unwrap_or(config.bm25.k1),
        args.b.or(f.bm25.b).unwrap_or(config.bm25.b),
    )?;
    let rm3 = Rm3Params {
        fb_docs: args.fb_docs.or(f.rm3.fb_docs).unwrap_or(config.rm3.fb_docs),
        fb_terms: args
            .fb_terms
            .or(f.rm3.fb_terms)
            .unwrap_or(config.rm3.fb_terms),
        original_query_weight: args
            .original_query_weight
            .or(f.rm3.original_query_weight)
            .unwrap_or(config.rm3.original_query_weight),
    };
    rm3.validate()?;
    config.rm3 = rm3;
    config.grf = GrfParams::new(
        args.beta.or(f.grf.beta).unwrap_or(config.grf.beta),
        args.theta.or(f.grf.theta).unwrap_or(config.grf.theta),
    )?;
    if let Some(s) = args.subtasks.as_deref().or(f.grf.subtasks.as_deref()) {
        config.subtasks = parse(s)?;
    }
    let bundles = if method.needs_generations() {
        let dir = required(
            args.generations.clone(),
            f.paths.generations.clone(),
            "generations",
        )?;
        if !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "generations directory {} not found",
                dir.display()
            )));
        }
        load_generations(&dir, &topics)?
    } else {
        Default::default()
    };
    Ok(Retrieval {
        index,
        topics,
        config,
        bundles,
    })
}

fn cmd_run(ctx: &Ctx, args: RunArgs) -> Result<(), CliError> {
    let method: Method = parse(&required(
        args.method.clone(),
        ctx.file.method.clone(),
        "method",
    )?)?;
    let out = required(args.out.clone(), ctx.file.paths.output.clone(), "out")?;
    let r = retrieval(ctx, &args.retrieval, method)?;
    let output = run_topics(&r.index, &r.topics, &r.config, &r.bundles)?;
    output.run.write(&out)?;
    if let Some(path) = &args.feedback_out {
        let body = serde_json::to_vec_pretty(&output.feedback)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        grf::fsutil::write_atomic(path, &body)?;
    }
    let empty = output.run.empty_queries();
    if ctx.json {
        print_json(&json!({
            "seed": ctx.seed,
            "method": method.to_string(),
            "queries": output.run.len(),
            "skipped": output.skipped,
            "empty_queries": empty,
            "out": out,
        }));
    } else {
        println!(
            "# method={method} seed={} depth={}",
            ctx.seed, r.config.depth
        );
        println!("{} queries written to {}", output.run.len(), out.display());
        if !output.skipped.is_empty() {
            println!("skipped (no generations): {}", output.skipped.join(" "));
        }
        if !empty.is_empty() {
            println!("empty after analysis: {}", empty.join(" "));
        }
    }
    Ok(())
}

fn qrels_path(ctx: &Ctx, flag: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    required(flag.clone(), ctx.file.paths.qrels.clone(), "qrels")
}

fn load_run(path: &Path) -> Result<RunFile, CliError> {
    Ok(RunFile::load(path)?)
}

fn means_json(report: &EvalReport) -> Value {
    json!({
        "ndcg10": report.means.ndcg10,
        "map": report.means.map,
        "r1000": report.means.r1000,
    })
}

fn cmd_eval(ctx: &Ctx, args: EvalArgs) -> Result<(), CliError> {
    let qrels = Qrels::load(&qrels_path(ctx, &args.qrels)?)?;
    let config = EvalConfig {
        rel_threshold: args.rel_threshold,
        depth: ctx.file.depth.unwrap_or(DEFAULT_DEPTH),
    };
    let report = evaluate(&load_run(&args.run)?, &qrels, config)?;
    let baseline = match &args.baseline {
        Some(path) => Some(evaluate(&load_run(path)?, &qrels, config)?),
        None => None,
    };
    let tests: Vec<(Metric, Option<eval::TTest>)> = Metric::ALL
        .iter()
        .map(|&m| (m, baseline.as_ref().and_then(|b| compare(b, &report, m))))
        .collect();
    let improved = |t: &Option<eval::TTest>| {
        t.as_ref()
            .is_some_and(|t| t.significant_at_95 && t.mean_diff > 0.0)
    };

    if ctx.json {
        let mut body = json!({
            "seed": ctx.seed,
            "run": args.run,
            "num_queries": report.num_queries,
            "means": means_json(&report),
            "per_query": report.per_query,
            "missing_from_run": report.missing_from_run,
        });
        if let Some(b) = &baseline {
            body["baseline"] = json!({"path": args.baseline, "means": means_json(b)});
            body["significance"] = tests
                .iter()
                .map(|(m, t)| {
                    let v = match t {
                        Some(t) => {
                            json!({"t": t.t, "p": t.p, "df": t.df, "improved": improved(&Some(*t))})
                        }
                        None => Value::Null,
                    };
                    (m.to_string(), v)
                })
                .collect::<serde_json::Map<_, _>>()
                .into();
        }
        print_json(&body);
        return Ok(());
    }

    println!(
        "# seed={} queries={} rel_threshold={}",
        ctx.seed, report.num_queries, args.rel_threshold
    );
    println!("{:<12} {:>8}  {:>8}  {:>8}", "", "NDCG@10", "MAP", "R@1k");
    if let Some(b) = &baseline {
        println!(
            "{:<12} {:>8.4}  {:>8.4}  {:>8.4}",
            "baseline", b.means.ndcg10, b.means.map, b.means.r1000
        );
    }
    let cell = |m: Metric| {
        let mark = if improved(&tests.iter().find(|(x, _)| *x == m).unwrap().1) {
            "+"
        } else {
            " "
        };
        format!("{:>8.4}{mark}", report.means.get(m))
    };
    println!(
        "{:<12} {} {} {}",
        "run",
        cell(Metric::Ndcg10),
        cell(Metric::Map),
        cell(Metric::R1000)
    );
    if baseline.is_some() {
        println!("+ significant improvement over baseline (paired t-test, p < 0.05)");
    }
    if !report.missing_from_run.is_empty() {
        println!(
            "missing from run (scored 0): {}",
            report.missing_from_run.join(" ")
        );
    }
    Ok(())
}

fn cmd_tune(ctx: &Ctx, args: TuneArgs) -> Result<(), CliError> {
    let method: Method = parse(&required(
        args.method.clone(),
        ctx.file.method.clone(),
        "method",
    )?)?;
    let grid = match method {
        Method::Bm25 => Grid::bm25_default(),
        Method::Rm3 => Grid::rm3_default(),
        Method::Grf => Grid::grf_default(),
        Method::GrfSubtask(_) => {
            return Err(CliError::Usage("tune supports bm25, rm3 and grf".into()))
        }
    };
    let objective: Metric = parse(
        args.objective
            .as_deref()
            .or(ctx.file.objective.as_deref())
            .unwrap_or("r1000"),
    )?;
    let qrels = Qrels::load(&qrels_path(ctx, &args.qrels)?)?;
    let r = retrieval(ctx, &args.retrieval, method)?;
    let folds = match args.folds.clone().or(ctx.file.paths.folds.clone()) {
        Some(path) => FoldSpec::load(&path)?,
        None => {
            let ids: Vec<String> = r
                .topics
                .iter()
                .filter(|t| qrels.for_query(&t.id).is_some())
                .map(|t| t.id.clone())
                .collect();
            FoldSpec::k_fold(&ids, 5, ctx.seed)?
        }
    };
    let eval_config = EvalConfig::default();
    let runner = tuning_runner(&r.index, &r.topics, &r.config, &r.bundles);
    let result = cross_validate(runner, &qrels, eval_config, &grid, &folds, objective)?;
    let merged = evaluate(&result.merged_test_run, &qrels, eval_config)?;
    if let Some(out) = args.out.clone().or(ctx.file.paths.output.clone()) {
        result.merged_test_run.write(&out)?;
    }
    let grid_note =
        (method == Method::Grf).then_some("theta/beta grid ranges are this tool's defaults");
    if ctx.json {
        print_json(&json!({
            "seed": ctx.seed,
            "method": method.to_string(),
            "objective": objective.to_string(),
            "folds": folds.folds.len(),
            "per_fold_best": result.per_fold_best,
            "transfer_params": result.transfer_params,
            "cv_means": means_json(&merged),
            "fixed_bm25": {"k1": r.config.bm25.k1, "b": r.config.bm25.b},
            "note": grid_note,
        }));
    } else {
        println!(
            "# method={method} objective={objective} folds={} seed={} grid_points={}",
            folds.folds.len(),
            ctx.seed,
            grid.len()
        );
        if method != Method::Bm25 {
            println!("fixed bm25: k1={} b={}", r.config.bm25.k1, r.config.bm25.b);
        }
        for (i, fold) in result.per_fold_best.iter().enumerate() {
            println!(
                "fold {i}: {} (train {objective}={:.4})",
                fold.best, fold.train_score
            );
        }
        println!("transfer: {}", result.transfer_params);
        println!(
            "cross-validated: NDCG@10={:.4} MAP={:.4} R@1k={:.4}",
            merged.means.ndcg10, merged.means.map, merged.means.r1000
        );
        if let Some(note) = grid_note {
            println!("note: {note}");
        }
    }
    Ok(())
}

fn cmd_hard_topics(ctx: &Ctx, args: HardTopicsArgs) -> Result<(), CliError> {
    if !(args.fraction > 0.0 && args.fraction <= 1.0) {
        return Err(CliError::Usage(format!(
            "--fraction must lie in (0, 1], got {}",
            args.fraction
        )));
    }
    let qrels = Qrels::load(&qrels_path(ctx, &args.qrels)?)?;
    let config = EvalConfig::default();
    let a = evaluate(&load_run(&args.run_a)?, &qrels, config)?;
    let b = evaluate(&load_run(&args.run_b)?, &qrels, config)?;
    let report = hard_topics(&a, &b, args.fraction)?;
    if ctx.json {
        let mut body =
            serde_json::to_value(&report).map_err(|e| CliError::Internal(e.to_string()))?;
        body["seed"] = json!(ctx.seed);
        print_json(&body);
    } else {
        println!(
            "# seed={} fraction={} topics={}",
            ctx.seed,
            report.fraction,
            report.queries.len()
        );
        println!("{:<10} {:>9} {:>9} {:>9}", "", "NDCG@10", "MAP", "R@1k");
        for (label, m) in [
            ("run_a", report.baseline),
            ("run_b", report.candidate),
            ("delta", report.delta),
        ] {
            println!(
                "{label:<10} {:>9.4} {:>9.4} {:>9.4}",
                m.ndcg10, m.map, m.r1000
            );
        }
        println!("topics: {}", report.queries.join(" "));
    }
    Ok(())
}
