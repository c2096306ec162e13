//! Acceptance suite: one integration test per shipping criterion. Each
//! test prints a single `acceptance PASS:` line (visible with
//! `--nocapture`) and pins its runtime budget in code.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphqa_core::actions::{
    parse_actions, render_list, ActionEvaluator, ActionExpr, ActionList, ParseError, Target,
};
use graphqa_core::agent::{
    judge_verdict, AgentBackends, EpisodeOptions, EpisodeRunner, NoopSink, PromptCatalog,
};
use graphqa_core::eval::{
    aggregate, read_dataset, read_results, render_report, rescore, rouge_l, run_benchmark,
    BenchmarkRun, DomainAssets, Report, ScriptedProvider,
};
use graphqa_core::graph::KnowledgeGraph;
use graphqa_core::llm::{ChatBackend, ChatTurn, GenerationParams, LlmError, Role};
use graphqa_core::replay::run_replay;
use graphqa_core::retrieval::RetrievalIndex;

const REPLAY_BUDGET_EACH: Duration = Duration::from_secs(1);
const BOUND_SUITE_BUDGET: Duration = Duration::from_secs(10);
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(5);
const GRAPH_ORACLE_BUDGET: Duration = Duration::from_secs(5);
const ROUGE_BUDGET: Duration = Duration::from_secs(2);
const ROUGE_TOLERANCE: f64 = 1e-12;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory exists")
}

// ===========================================================================
// 1. Golden transcript replay

#[test]
fn golden_transcript_replay() {
    let mut slowest = Duration::ZERO;
    for (name, answer) in [("amazon", "48"), ("biomedical", "atopic dermatitis")] {
        let started = Instant::now();
        let outcome = run_replay(&fixtures().join(name)).expect("fixture loads");
        let elapsed = started.elapsed();
        slowest = slowest.max(elapsed);
        assert!(
            outcome.passed(),
            "{name} replay diverged:\n{}",
            outcome.render()
        );
        assert_eq!(
            outcome.state.final_answer.as_deref(),
            Some(answer),
            "{name}"
        );
        assert!(
            elapsed < REPLAY_BUDGET_EACH,
            "{name} replay took {elapsed:?}, budget {REPLAY_BUDGET_EACH:?}"
        );
    }

    // The first fixture recovers from a wrong count through exactly one
    // reflection and a second attempt.
    let amazon = run_replay(&fixtures().join("amazon")).unwrap();
    assert_eq!(amazon.state.n, 1, "amazon reflections");
    assert_eq!(amazon.state.attempts_used(), 2, "amazon attempts");
    assert!(amazon.state.correct);

    println!(
        "acceptance PASS: golden transcript replay — both fixtures byte-identical, slowest {slowest:?}"
    );
}

// ===========================================================================
// 2. Episode bound suite

#[derive(Clone, Copy, PartialEq, Debug)]
enum Sabotage {
    /// Emits valid actions but never Finish: every attempt hits the step cap.
    NeverFinish,
    /// Finishes immediately with an answer the judge always rejects.
    AlwaysNo,
    /// Emits only malformed actions, each consuming a step as an advisory.
    Malformed,
}

/// A backend that classifies each call by the cue line ending the last
/// user turn and answers adversarially for its sabotage mode.
struct AdversarialBackend {
    mode: Sabotage,
    judge_calls: AtomicUsize,
    reflect_calls: AtomicUsize,
    action_calls: AtomicUsize,
}

impl AdversarialBackend {
    fn new(mode: Sabotage) -> Self {
        AdversarialBackend {
            mode,
            judge_calls: AtomicUsize::new(0),
            reflect_calls: AtomicUsize::new(0),
            action_calls: AtomicUsize::new(0),
        }
    }
}

impl ChatBackend for AdversarialBackend {
    fn name(&self) -> &str {
        "adversarial"
    }

    fn complete(&self, turns: &[ChatTurn], _params: &GenerationParams) -> Result<String, LlmError> {
        let user = turns
            .iter()
            .rev()
            .find(|t| t.role == Role::User)
            .map(|t| t.content.as_str())
            .unwrap_or("");
        let last_line = user.trim_end().rsplit('\n').next().unwrap_or("").trim();

        if last_line == "Proceed with explanation and judgment below:" {
            self.judge_calls.fetch_add(1, Ordering::SeqCst);
            return Ok("The final answer is not supported by the observations. [no]".into());
        }
        if last_line == "Reflection:" {
            self.reflect_calls.fetch_add(1, Ordering::SeqCst);
            return Ok(
                "Recap of the Trial: the attempt failed; try a shorter path. (END OF REFLECTION)"
                    .into(),
            );
        }
        if last_line.starts_with("Action") {
            let nth = self.action_calls.fetch_add(1, Ordering::SeqCst);
            let reply = match self.mode {
                Sabotage::NeverFinish => "Retrieve[Hand in Glove]",
                Sabotage::AlwaysNo => "Finish[whatever comes to mind]",
                Sabotage::Malformed => match nth % 3 {
                    0 => "Summon[the, void]",
                    1 => "Feature[only-one-argument]",
                    _ => "Retrieve[broken",
                },
            };
            return Ok(reply.into());
        }
        Ok("Considering the question carefully.".into())
    }
}

#[test]
fn episode_bound_suite() {
    let started = Instant::now();
    let graph = KnowledgeGraph::load(fixtures().join("sample/graph.json")).unwrap();
    let index = RetrievalIndex::build(&graph, &["title".to_string()]).unwrap();
    let catalog = PromptCatalog::load(&fixtures().join("catalogs/amazon")).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2024);
    let modes = [
        Sabotage::NeverFinish,
        Sabotage::AlwaysNo,
        Sabotage::Malformed,
    ];

    for i in 0..200 {
        let mode = modes[i % modes.len()];
        let t_max = rng.gen_range(1..=10);
        let n_max = rng.gen_range(0..=3);
        let backend = Arc::new(AdversarialBackend::new(mode));
        let runner = EpisodeRunner::new(
            ActionEvaluator::new(&graph, &index),
            &catalog,
            AgentBackends::single(backend.clone()),
            EpisodeOptions {
                t_max,
                n_max,
                question_id: format!("adversarial-{i}"),
                ..EpisodeOptions::default()
            },
        );
        let state = runner
            .run("Which item goes with the dust cover?", &mut NoopSink)
            .expect("adversarial episodes never fail transport");

        let judges = backend.judge_calls.load(Ordering::SeqCst);
        let reflects = backend.reflect_calls.load(Ordering::SeqCst);
        let label = format!("episode {i} ({mode:?}, T={t_max}, N={n_max})");

        // The four bounds every episode must satisfy.
        assert!(
            state.attempts.len() <= n_max + 1,
            "{label}: {} attempts",
            state.attempts.len()
        );
        for (k, attempt) in state.attempts.iter().enumerate() {
            assert!(
                attempt.steps.len() <= t_max,
                "{label}: attempt {} ran {} steps",
                k + 1,
                attempt.steps.len()
            );
        }
        assert!(reflects <= n_max, "{label}: {reflects} reflections");
        assert!(judges <= n_max + 1, "{label}: {judges} judge calls");

        // Exact shape per sabotage mode, stronger than the bounds.
        assert_eq!(state.attempts.len(), n_max + 1, "{label}: attempts");
        assert_eq!(reflects, n_max, "{label}: reflections");
        assert!(!state.correct, "{label}: judge never accepts");
        match mode {
            Sabotage::AlwaysNo => {
                assert_eq!(judges, n_max + 1, "{label}: every attempt is judged");
                for attempt in &state.attempts {
                    assert_eq!(attempt.steps.len(), 1, "{label}: finishes on step 1");
                    assert_eq!(attempt.judged_correct, Some(false), "{label}");
                }
            }
            Sabotage::NeverFinish | Sabotage::Malformed => {
                assert_eq!(judges, 0, "{label}: timeouts are never judged");
                for attempt in &state.attempts {
                    assert_eq!(attempt.steps.len(), t_max, "{label}: runs to the cap");
                    assert_eq!(attempt.judged_correct, None, "{label}");
                }
            }
        }
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed < BOUND_SUITE_BUDGET,
        "bound suite took {elapsed:?}, budget {BOUND_SUITE_BUDGET:?}"
    );
    println!("acceptance PASS: episode bound suite — 200 adversarial episodes in {elapsed:?}");
}

// ===========================================================================
// 3. Action-language round-trip

/// Bracket-free word: safe as a node id, feature name, or edge label.
fn gen_word(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-:.";
    let len = rng.gen_range(1..=12);
    (0..len)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
        .collect()
}

/// Free text for Retrieve/Finish interiors: space-separated words, with
/// occasional embedded commas (legal inside one bracket pair). No leading
/// or trailing whitespace, because interiors are end-trimmed on parse.
fn gen_text(rng: &mut ChaCha8Rng) -> String {
    let words = rng.gen_range(1..=5);
    let mut text = String::new();
    for i in 0..words {
        if i > 0 {
            text.push_str(if rng.gen_bool(0.2) { ", " } else { " " });
        }
        text.push_str(&gen_word(rng));
    }
    text
}

fn gen_target(rng: &mut ChaCha8Rng) -> Target {
    if rng.gen_bool(0.3) {
        Target::Retrieve(gen_text(rng))
    } else {
        Target::Node(gen_word(rng))
    }
}

fn gen_non_finish_expr(rng: &mut ChaCha8Rng) -> ActionExpr {
    match rng.gen_range(0..4) {
        0 => ActionExpr::Retrieve(gen_text(rng)),
        1 => ActionExpr::Feature {
            target: gen_target(rng),
            feature: gen_word(rng),
        },
        2 => ActionExpr::Neighbour {
            target: gen_target(rng),
            label: gen_word(rng),
        },
        _ => ActionExpr::Degree {
            target: gen_target(rng),
            label: gen_word(rng),
        },
    }
}

fn gen_action_list(rng: &mut ChaCha8Rng) -> ActionList {
    if rng.gen_bool(0.1) {
        return ActionList::new(vec![ActionExpr::Finish(gen_text(rng))]).unwrap();
    }
    let n = rng.gen_range(1..=3);
    ActionList::new((0..n).map(|_| gen_non_finish_expr(rng)).collect()).unwrap()
}

#[test]
fn action_language_round_trip() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xac71_0235);

    for i in 0..1000 {
        let list = gen_action_list(&mut rng);
        let rendered = render_list(&list);
        let reparsed = parse_actions(&rendered)
            .unwrap_or_else(|e| panic!("iteration {i}: {rendered:?} failed to parse: {e}"));
        assert_eq!(reparsed, list, "iteration {i}: round-trip of {rendered:?}");
    }

    // The three documented transcript action strings and their shapes.
    let single =
        parse_actions("Retrieve[Nokia CC-3068 Shell for Lumia 520 - Retail Packaging - White]")
            .unwrap();
    assert_eq!(
        single.exprs(),
        &[ActionExpr::Retrieve(
            "Nokia CC-3068 Shell for Lumia 520 - Retail Packaging - White".into()
        )]
    );

    let parallel = parse_actions(
        "Neighbour[DOID:3310, Disease-localizes-Anatomy], Neighbour[DOID:8893, Disease-localizes-Anatomy]",
    )
    .unwrap();
    assert_eq!(
        parallel.exprs(),
        &[
            ActionExpr::Neighbour {
                target: Target::Node("DOID:3310".into()),
                label: "Disease-localizes-Anatomy".into(),
            },
            ActionExpr::Neighbour {
                target: Target::Node("DOID:8893".into()),
                label: "Disease-localizes-Anatomy".into(),
            },
        ]
    );

    let compound = parse_actions("Neighbour[Retrieve[Alice B. Cooper], paper]").unwrap();
    assert_eq!(
        compound.exprs(),
        &[ActionExpr::Neighbour {
            target: Target::Retrieve("Alice B. Cooper".into()),
            label: "paper".into(),
        }]
    );

    // Three-deep nesting is rejected with an advisory the model can act on.
    let deep = parse_actions(
        "Neighbour[Neighbour[Retrieve[Nokia CC-3068 Shell for Lumia 520 - Retail Packaging - White], bought_together_item], bought_together_item]",
    )
    .unwrap_err();
    assert_eq!(deep, ParseError::InnerNotRetrieve);
    assert!(
        deep.to_string()
            .contains("at most two functions can be combined"),
        "advisory: {deep}"
    );
    assert!(
        deep.to_string().contains("Please modify it."),
        "advisory: {deep}"
    );

    // Finish refuses both the inner slot and company.
    let finish_inner = parse_actions("Feature[Finish[48], name]").unwrap_err();
    assert_eq!(finish_inner, ParseError::InnerNotRetrieve);
    let finish_combined = parse_actions("Finish[48], Retrieve[x]").unwrap_err();
    assert_eq!(finish_combined, ParseError::FinishCombined);
    assert!(
        finish_combined.to_string().contains("by itself"),
        "advisory: {finish_combined}"
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed < ROUND_TRIP_BUDGET,
        "round-trip suite took {elapsed:?}, budget {ROUND_TRIP_BUDGET:?}"
    );
    println!("acceptance PASS: action-language round-trip — 1000 lists + documented shapes in {elapsed:?}");
}

// ===========================================================================
// 4. Graph-primitive oracle equivalence

/// Builds a random graph file and returns its JSON text. Some target lists
/// deliberately contain duplicates, which the loader must drop keep-first.
fn random_graph_json(rng: &mut ChaCha8Rng) -> String {
    let node_count = rng.gen_range(1..=200);
    let ids: Vec<String> = (0..node_count).map(|i| format!("n{i:03}")).collect();
    let labels = ["cites", "treats", "bought-with"];

    let mut nodes = serde_json::Map::new();
    for id in &ids {
        nodes.insert(
            id.clone(),
            serde_json::json!({"features": {"name": format!("entity {id}")}}),
        );
    }

    let mut edges = serde_json::Map::new();
    for id in &ids {
        if !rng.gen_bool(0.7) {
            continue;
        }
        let mut by_label = serde_json::Map::new();
        let chosen: Vec<&str> = labels
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        for label in chosen {
            let count = rng.gen_range(1..=6).min(ids.len());
            let mut targets: Vec<String> = ids.choose_multiple(rng, count).cloned().collect();
            if targets.len() > 1 && rng.gen_bool(0.2) {
                // Duplicate an existing entry to exercise keep-first dedup.
                let dup = targets[rng.gen_range(0..targets.len())].clone();
                targets.push(dup);
            }
            by_label.insert(label.to_string(), serde_json::json!(targets));
        }
        if !by_label.is_empty() {
            edges.insert(id.clone(), serde_json::Value::Object(by_label));
        }
    }

    serde_json::Value::Object(serde_json::Map::from_iter([
        ("nodes".to_string(), serde_json::Value::Object(nodes)),
        ("edges".to_string(), serde_json::Value::Object(edges)),
    ]))
    .to_string()
}

/// Independent adjacency read: raw JSON to (source, label) → targets with
/// keep-first dedup, never touching the graph type under test.
fn brute_force_adjacency(text: &str) -> BTreeMap<(String, String), Vec<String>> {
    let value: serde_json::Value = serde_json::from_str(text).unwrap();
    let mut adjacency = BTreeMap::new();
    for (source, by_label) in value["edges"].as_object().unwrap() {
        for (label, targets) in by_label.as_object().unwrap() {
            let mut seen = Vec::new();
            for target in targets.as_array().unwrap() {
                let target = target.as_str().unwrap().to_string();
                if !seen.contains(&target) {
                    seen.push(target);
                }
            }
            adjacency.insert((source.clone(), label.clone()), seen);
        }
    }
    adjacency
}

#[test]
fn graph_primitive_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6ea9_0417);
    let labels = ["cites", "treats", "bought-with"];

    for case in 0..50 {
        let text = random_graph_json(&mut rng);
        let graph = KnowledgeGraph::from_json(&text)
            .unwrap_or_else(|e| panic!("case {case}: generated graph must load: {e}"));
        let oracle = brute_force_adjacency(&text);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let node_ids: Vec<String> = value["nodes"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();

        for v in &node_ids {
            for r in labels {
                let expected = oracle
                    .get(&(v.clone(), r.to_string()))
                    .cloned()
                    .unwrap_or_default();
                let neighbours = graph
                    .get_neighbours(v, r)
                    .unwrap_or_else(|e| panic!("case {case}: ({v}, {r}): {e:?}"));
                let got: Vec<String> = neighbours.iter().map(|n| n.as_str().to_string()).collect();
                assert_eq!(got, expected, "case {case}: neighbours of ({v}, {r})");

                let degree = graph.get_degree(v, r).unwrap();
                assert_eq!(
                    degree,
                    neighbours.len(),
                    "case {case}: degree vs list ({v}, {r})"
                );
                assert_eq!(
                    degree,
                    expected.len(),
                    "case {case}: degree vs oracle ({v}, {r})"
                );
            }
        }
    }

    // Micro-examples on the bundled sample graph.
    let graph = KnowledgeGraph::load(fixtures().join("sample/graph.json")).unwrap();
    let index = RetrievalIndex::build(&graph, &["title".to_string()]).unwrap();
    let hit = index
        .retrieve_top1("Hand in Glove")
        .unwrap()
        .expect("query matches a node");
    assert_eq!(hit.node.as_str(), "1047566");
    assert_eq!(graph.get_feature("1047566", "category"), Ok("books"));
    let neighbours = graph.get_neighbours("203088", "also-bought-item").unwrap();
    let ids: Vec<&str> = neighbours.iter().map(|n| n.as_str()).collect();
    assert_eq!(ids, ["203010"]);
    assert_eq!(graph.get_degree("203088", "also-bought-item"), Ok(1));

    let elapsed = started.elapsed();
    assert!(
        elapsed < GRAPH_ORACLE_BUDGET,
        "graph oracle suite took {elapsed:?}, budget {GRAPH_ORACLE_BUDGET:?}"
    );
    println!("acceptance PASS: graph-primitive oracle equivalence — 50 graphs + micro-examples in {elapsed:?}");
}

// ===========================================================================
// 5. Rouge-L correctness

/// Full-matrix LCS, written independently of the two-row implementation
/// under test.
fn lcs_oracle(a: &[&str], b: &[&str]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            table[i][j] = if a[i - 1] == b[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    table[a.len()][b.len()]
}

#[test]
fn rouge_l_matches_independent_oracle() {
    let started = Instant::now();

    assert_eq!(rouge_l("atopic dermatitis", "atopic dermatitis"), 1.0);
    assert_eq!(rouge_l("Atopic Dermatitis", "atopic dermatitis"), 1.0);
    assert_eq!(rouge_l("alpha beta gamma", "delta epsilon"), 0.0);
    assert_eq!(rouge_l("", "anything"), 0.0);
    assert_eq!(rouge_l("anything", ""), 0.0);

    let vocab = [
        "ear",
        "skin",
        "graph",
        "node",
        "atopic",
        "psoriasis",
        "limb",
        "hand",
        "cover",
        "48",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x40a9_e501);
    for case in 0..100 {
        let len_a = rng.gen_range(0..=30);
        let len_b = rng.gen_range(0..=30);
        let a: Vec<&str> = (0..len_a)
            .map(|_| vocab[rng.gen_range(0..vocab.len())])
            .collect();
        let b: Vec<&str> = (0..len_b)
            .map(|_| vocab[rng.gen_range(0..vocab.len())])
            .collect();
        let pred = a.join(" ");
        let reference = b.join(" ");

        let expected = if a.is_empty() || b.is_empty() {
            0.0
        } else {
            lcs_oracle(&a, &b) as f64 / b.len() as f64
        };
        let got = rouge_l(&pred, &reference);
        assert!(
            (got - expected).abs() <= ROUGE_TOLERANCE,
            "case {case}: rouge_l({pred:?}, {reference:?}) = {got}, oracle {expected}"
        );
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed < ROUGE_BUDGET,
        "rouge suite took {elapsed:?}, budget {ROUGE_BUDGET:?}"
    );
    println!("acceptance PASS: rouge-l oracle equivalence — 100 pairs within {ROUGE_TOLERANCE:e} in {elapsed:?}");
}

// ===========================================================================
// 6. Benchmark determinism

fn bench_assets() -> BTreeMap<String, DomainAssets> {
    let mut assets = BTreeMap::new();
    for domain in ["amazon", "biomedical"] {
        let graph = KnowledgeGraph::load(fixtures().join(domain).join("graph.json")).unwrap();
        let fields: Vec<String> = graph.schema().feature_types.iter().cloned().collect();
        let index = RetrievalIndex::build(&graph, &fields).unwrap();
        let catalog = PromptCatalog::load(&fixtures().join("catalogs").join(domain)).unwrap();
        assets.insert(
            domain.to_string(),
            DomainAssets {
                graph,
                index,
                catalog,
            },
        );
    }
    assets
}

fn bench_once(workers: usize, dir: &std::path::Path) -> (String, Report, String) {
    let dataset = read_dataset(&fixtures().join("bench/dataset.jsonl")).unwrap();
    let assets = bench_assets();
    let provider = ScriptedProvider::new(fixtures().join("bench/scripts"));
    let results_path = dir.join("results.jsonl");
    let (_, report) = run_benchmark(&BenchmarkRun {
        dataset: &dataset,
        assets: &assets,
        provider: &provider,
        t_max: 3,
        n_max: 1,
        params: GenerationParams::default(),
        workers,
        deterministic_timing: true,
        resume: false,
        results_path: &results_path,
        log_path: Some(&dir.join("episodes.jsonl")),
    })
    .unwrap();
    let bytes = std::fs::read_to_string(&results_path).unwrap();
    let rendered = render_report(&report);
    (bytes, report, rendered)
}

#[test]
fn benchmark_determinism() {
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();

    let (bytes_a, report_a, rendered_a) = bench_once(1, dirs[0].path());
    let (bytes_b, _, rendered_b) = bench_once(1, dirs[1].path());
    let (bytes_c, _, rendered_c) = bench_once(4, dirs[2].path());

    assert_eq!(bytes_a, bytes_b, "two identical runs differ");
    assert_eq!(
        rendered_a, rendered_b,
        "two identical runs render differently"
    );
    assert_eq!(bytes_a, bytes_c, "worker counts 1 and 4 differ");
    assert_eq!(
        rendered_a, rendered_c,
        "worker counts 1 and 4 render differently"
    );

    // Independent rescoring over the persisted rows reproduces the report.
    assert!(report_a.failures.is_empty(), "fixture run must be clean");
    let dataset = read_dataset(&fixtures().join("bench/dataset.jsonl")).unwrap();
    let rows = read_results(&dirs[0].path().join("results.jsonl")).unwrap();
    assert_eq!(rows.len(), 20);
    let rescored = rescore(&dataset, &rows).unwrap();
    let rebuilt = aggregate(&rescored);
    assert_eq!(rebuilt, report_a, "rescoring does not reproduce the report");

    println!("acceptance PASS: benchmark determinism — 20 questions stable across runs, workers, and rescoring");
}

// ===========================================================================
// 7. Judge-token parsing

#[test]
fn judge_token_parsing_table() {
    // (reply, parsed verdict); None maps to false downstream.
    let table: [(&str, Option<bool>); 30] = [
        // Single positive token, case and padding variants.
        ("[yes]", Some(true)),
        ("[YES]", Some(true)),
        ("[Yes]", Some(true)),
        ("[yEs]", Some(true)),
        ("The answer is correct. [yes]", Some(true)),
        ("[yes] is my verdict", Some(true)),
        ("verdict:[yes]", Some(true)),
        ("multi\nline\nreply\n[yes]", Some(true)),
        // Single negative token, case variants.
        ("[no]", Some(false)),
        ("[NO]", Some(false)),
        ("[No]", Some(false)),
        ("[nO]", Some(false)),
        ("The answer is wrong. [no]", Some(false)),
        ("[no], sadly", Some(false)),
        ("line one\n[no]\n", Some(false)),
        // Both tokens: rightmost wins, regardless of case.
        ("[no] but on reflection [yes]", Some(true)),
        ("[yes] although actually [no]", Some(false)),
        ("[NO] ... [Yes]", Some(true)),
        ("[YES] ... [no]", Some(false)),
        ("[yes] [no] [yes]", Some(true)),
        ("[no] [yes] [no]", Some(false)),
        ("[yes][no]", Some(false)),
        ("[no][yes]", Some(true)),
        ("first [Yes], second [No], third [YES]", Some(true)),
        // Neither token: unparseable, graded incorrect downstream.
        ("", None),
        ("no tokens at all", None),
        ("yes without brackets", None),
        ("the word no, unbracketed", None),
        ("[maybe]", None),
        ("[y e s]", None),
    ];

    for (reply, expected) in table {
        let got = judge_verdict(reply);
        assert_eq!(got, expected, "reply {reply:?}");
        if expected.is_none() {
            // Both judges treat an unparseable reply as a rejection.
            assert!(!got.unwrap_or(false), "reply {reply:?} must grade false");
        }
    }

    println!("acceptance PASS: judge-token parsing — 30-case table");
}
