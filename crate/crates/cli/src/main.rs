//! Operator command line for the graph question answering engine.
//!
//! Exit codes: 0 on success, 1 when an executed check fails (replay
//! divergence, graph validation findings, a failed episode), 2 for
//! configuration and usage problems.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use graphqa_core::actions::ActionEvaluator;
use graphqa_core::agent::{AgentBackends, EpisodeOptions, EpisodeRunner, JsonlSink, PromptCatalog};
use graphqa_core::config::{BackendSpec, CliOverrides, RunConfig};
use graphqa_core::eval::{
    read_dataset, render_report, run_benchmark, BackendProvider, BenchmarkRun, DomainAssets,
    RecordBackends, ScriptedProvider, SharedBackendProvider,
};
use graphqa_core::graph::KnowledgeGraph;
use graphqa_core::llm::{with_retry, ChatBackend, HttpBackend, RetryPolicy, ScriptedBackend};
use graphqa_core::replay::run_replay;
use graphqa_core::retrieval::RetrievalIndex;

#[derive(Debug, Parser)]
#[command(
    name = "graphqa",
    version,
    about = "Graph question answering: ask questions, run benchmarks, replay episodes"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; flags and environment override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Inner-loop step budget per attempt.
    #[arg(long, global = true, value_name = "N")]
    t_max: Option<usize>,

    /// Maximum reflections per episode.
    #[arg(long, global = true, value_name = "N")]
    n_reflect: Option<usize>,

    /// Benchmark worker threads.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Directory for results, logs, and reports.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Chat-completions endpoint URL (overrides GC_LLM_URL).
    #[arg(long, global = true, value_name = "URL")]
    backend_url: Option<String>,

    /// Model name sent to the endpoint (overrides GC_LLM_MODEL).
    #[arg(long, global = true, value_name = "NAME")]
    backend_model: Option<String>,

    /// Bearer token for the endpoint (overrides GC_LLM_KEY).
    #[arg(long, global = true, value_name = "KEY")]
    backend_key: Option<String>,

    /// Reserved for future use. The engine is deterministic end to end
    /// (retrieval tie-breaks are lexicographic and sampling happens
    /// server-side), so no component consumes a seed today.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer one question against a configured domain graph.
    Ask {
        /// Domain key naming the graph and prompt catalog to use.
        #[arg(long)]
        domain: String,
        /// The question to answer.
        question: String,
    },
    /// Run every question in a dataset and write results, logs, and a report.
    Bench {
        /// JSONL dataset file (question_id, question, answer, domain, difficulty).
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Skip questions that already have a persisted result row.
        #[arg(long)]
        resume: bool,
    },
    /// Re-execute a recorded episode fixture and verify it byte-for-byte.
    Replay {
        /// Fixture directory (fixture.json, graph.json, script.json, catalog/, expected/).
        fixture_dir: PathBuf,
    },
    /// Load a graph file, check its invariants, and print its statistics.
    Validate {
        /// Graph JSON file.
        graph_path: PathBuf,
    },
    /// Print the effective configuration after file, env, and flag merging.
    ConfigShow,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if cli.global.seed.is_some() {
        log::warn!("--seed is reserved and currently unused; the run is deterministic without it");
    }
    let config = resolve_config(&cli.global)?;
    match cli.command {
        Command::Ask { domain, question } => cmd_ask(&config, &domain, &question),
        Command::Bench { dataset, resume } => cmd_bench(&config, &dataset, resume),
        Command::Replay { fixture_dir } => cmd_replay(&fixture_dir),
        Command::Validate { graph_path } => cmd_validate(&graph_path),
        Command::ConfigShow => {
            print!("{}", config.to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// File < environment < flags, then validated.
fn resolve_config(global: &GlobalArgs) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::load_or_default(global.config.as_deref())?;
    config.apply_env();
    config.apply_overrides(&CliOverrides {
        t_max: global.t_max,
        n_reflect: global.n_reflect,
        workers: global.workers,
        out_dir: global.out.clone(),
        backend_url: global.backend_url.clone(),
        backend_model: global.backend_model.clone(),
        backend_key: global.backend_key.clone(),
    });
    config.validate()?;
    Ok(config)
}

/// Loads the graph, retrieval index, and prompt catalog for one domain.
fn load_domain_assets(config: &RunConfig, domain: &str) -> anyhow::Result<DomainAssets> {
    let graph_path = config.graphs.get(domain).ok_or_else(|| {
        anyhow!(
            "domain '{domain}' has no graph configured; \
             add `{domain} = \"path/to/graph.json\"` under [graphs] in the config"
        )
    })?;
    let graph = KnowledgeGraph::load(graph_path)
        .with_context(|| format!("could not load graph for domain '{domain}'"))?;
    for warning in graph.warnings() {
        log::warn!("graph {}: {warning}", graph_path.display());
    }
    let catalog_dir = config.catalog_dir.as_ref().ok_or_else(|| {
        anyhow!(
            "no catalog_dir configured; set `catalog_dir` in the config to a directory \
             holding one prompt-catalog subdirectory per domain"
        )
    })?;
    let catalog = PromptCatalog::load(&catalog_dir.join(domain))
        .with_context(|| format!("could not load prompt catalog for domain '{domain}'"))?;
    let fields: Vec<String> = if config.retrieval_fields.is_empty() {
        graph.schema().feature_types.iter().cloned().collect()
    } else {
        config.retrieval_fields.clone()
    };
    let index = RetrievalIndex::build(&graph, &fields)?;
    Ok(DomainAssets {
        graph,
        index,
        catalog,
    })
}

/// Resolves one backend spec into a live backend. `dir`-style scripted
/// specs are benchmark-only and rejected here.
fn resolve_backend(spec: &BackendSpec, role: &str) -> anyhow::Result<Arc<dyn ChatBackend>> {
    match spec {
        BackendSpec::Http { url, model, key } => {
            let url = url.clone().ok_or_else(|| {
                anyhow!(
                    "{role} backend has no URL; pass --backend-url, set GC_LLM_URL, \
                     or configure backends.{role}.url"
                )
            })?;
            let model = model.clone().ok_or_else(|| {
                anyhow!(
                    "{role} backend has no model; pass --backend-model, set GC_LLM_MODEL, \
                     or configure backends.{role}.model"
                )
            })?;
            let http = HttpBackend::new(url, model, key.clone())?;
            Ok(Arc::new(with_retry(http, RetryPolicy::default())))
        }
        BackendSpec::Scripted {
            script: Some(path), ..
        } => Ok(Arc::new(ScriptedBackend::from_file(path)?)),
        BackendSpec::Scripted { script: None, .. } => bail!(
            "{role} backend is scripted with a dir, which only `bench` supports; \
             for single questions set `script` to one script file"
        ),
    }
}

/// Resolves the three agent roles, sharing one instance wherever a role
/// falls back to the reasoning spec so a single replay script serves the
/// whole episode in call order.
fn resolve_agent_backends(config: &RunConfig) -> anyhow::Result<AgentBackends> {
    let reason = resolve_backend(&config.backends.reasoning, "reasoning")?;
    let judge = match &config.backends.judge {
        Some(spec) => resolve_backend(spec, "judge")?,
        None => reason.clone(),
    };
    let reflect = match &config.backends.reflection {
        Some(spec) => resolve_backend(spec, "reflection")?,
        None => reason.clone(),
    };
    Ok(AgentBackends {
        reason,
        judge,
        reflect,
    })
}

fn cmd_ask(config: &RunConfig, domain: &str, question: &str) -> anyhow::Result<ExitCode> {
    let assets = load_domain_assets(config, domain)?;
    let backends = resolve_agent_backends(config)?;

    std::fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("could not create out dir {}", config.out_dir.display()))?;
    let log_path = config.out_dir.join("ask-log.jsonl");
    let log_file = std::fs::File::create(&log_path)
        .with_context(|| format!("could not create step log {}", log_path.display()))?;
    let mut sink = JsonlSink::new(std::io::BufWriter::new(log_file));

    let runner = EpisodeRunner::new(
        ActionEvaluator::new(&assets.graph, &assets.index),
        &assets.catalog,
        backends,
        EpisodeOptions {
            t_max: config.t_max,
            n_max: config.n_reflect,
            params: config.generation.to_params(),
            question_id: "ask".into(),
        },
    );

    let state = match runner.run(question, &mut sink) {
        Ok(state) => state,
        Err(err) => {
            // The episode itself failed (transport, script mismatch): the
            // partial step log is still on disk for inspection.
            eprintln!("episode failed: {err}");
            eprintln!("step log: {}", log_path.display());
            return Ok(ExitCode::from(1));
        }
    };
    sink.into_inner().flush()?;

    println!(
        "answer: {}",
        state.final_answer.as_deref().unwrap_or("<none>")
    );
    println!("attempts: {}", state.attempts_used());
    println!("reflections: {}", state.n);
    println!("accepted: {}", state.correct);
    println!("step log: {}", log_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(config: &RunConfig, dataset_path: &Path, resume: bool) -> anyhow::Result<ExitCode> {
    let dataset = read_dataset(dataset_path)?;
    if dataset.is_empty() {
        bail!("dataset {} has no records", dataset_path.display());
    }

    let mut assets: BTreeMap<String, DomainAssets> = BTreeMap::new();
    for record in &dataset {
        if !assets.contains_key(&record.domain) {
            let loaded = load_domain_assets(config, &record.domain)?;
            assets.insert(record.domain.clone(), loaded);
        }
    }

    // Scripted runs replay one script file per question; live runs share
    // the configured role backends across all records.
    let scripted_dir = match &config.backends.reasoning {
        BackendSpec::Scripted { dir: Some(dir), .. } => Some(dir.clone()),
        BackendSpec::Scripted { dir: None, .. } => bail!(
            "bench needs a scripts directory: set backends.reasoning `dir` \
             to a directory of {{question_id}}.json files"
        ),
        BackendSpec::Http { .. } => None,
    };
    let scripted_provider;
    let shared_provider;
    let provider: &dyn BackendProvider = match &scripted_dir {
        Some(dir) => {
            scripted_provider = ScriptedProvider::new(dir.clone());
            &scripted_provider
        }
        None => {
            let agent = resolve_agent_backends(config)?;
            let consistency_judge = agent.judge.clone();
            shared_provider = SharedBackendProvider::new(RecordBackends {
                agent,
                consistency_judge,
            });
            &shared_provider
        }
    };

    std::fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("could not create out dir {}", config.out_dir.display()))?;
    let results_path = config.out_dir.join("results.jsonl");
    let log_path = config.out_dir.join("episodes.jsonl");

    let (_results, report) = run_benchmark(&BenchmarkRun {
        dataset: &dataset,
        assets: &assets,
        provider,
        t_max: config.t_max,
        n_max: config.n_reflect,
        params: config.generation.to_params(),
        workers: config.workers,
        deterministic_timing: scripted_dir.is_some(),
        resume,
        results_path: &results_path,
        log_path: Some(&log_path),
    })?;

    let rendered = render_report(&report);
    let report_txt = config.out_dir.join("report.txt");
    let report_json = config.out_dir.join("report.json");
    std::fs::write(&report_txt, &rendered)?;
    std::fs::write(&report_json, serde_json::to_string_pretty(&report)? + "\n")?;

    print!("{rendered}");
    println!("results: {}", results_path.display());
    println!("episode log: {}", log_path.display());
    println!(
        "report: {} / {}",
        report_txt.display(),
        report_json.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(fixture_dir: &Path) -> anyhow::Result<ExitCode> {
    let outcome = run_replay(fixture_dir)
        .with_context(|| format!("could not replay fixture {}", fixture_dir.display()))?;
    print!("{}", outcome.render());
    if outcome.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_validate(graph_path: &Path) -> anyhow::Result<ExitCode> {
    let graph = match KnowledgeGraph::load(graph_path) {
        Ok(graph) => graph,
        Err(err) => {
            eprintln!("invalid graph {}: {err}", graph_path.display());
            return Ok(ExitCode::from(1));
        }
    };
    let schema = graph.schema();
    println!("nodes: {}", graph.node_count());
    println!("edges: {}", graph.edge_count());
    println!(
        "edge labels ({}): {}",
        schema.edge_labels.len(),
        join_sorted(&schema.edge_labels)
    );
    println!(
        "feature types ({}): {}",
        schema.feature_types.len(),
        join_sorted(&schema.feature_types)
    );
    println!("warnings: {}", graph.warnings().len());
    for warning in graph.warnings() {
        println!("  {warning}");
    }
    Ok(ExitCode::SUCCESS)
}

fn join_sorted(set: &std::collections::BTreeSet<String>) -> String {
    set.iter().cloned().collect::<Vec<_>>().join(", ")
}
