//! Golden-transcript replay.
//!
//! A fixture directory bundles everything one scripted episode needs:
//!
//! ```text
//! fixture.json        manifest (question, budgets, expectations)
//! graph.json          graph slice
//! script.json         scripted backend replies
//! catalog/            the five prompt-catalog files
//! expected/attempt1.txt, attempt2.txt, …   scratchpad per attempt
//! ```
//!
//! Replaying runs the episode against the script and checks the final
//! answer, attempt/reflection counts, and each attempt's rendered
//! scratchpad byte-for-byte (expected files may carry trailing newlines,
//! which are ignored). Any divergence is reported with the first
//! differing line.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::actions::ActionEvaluator;
use crate::agent::{
    render_scratchpad, AgentBackends, EpisodeOptions, EpisodeRunner, EpisodeState, NoopSink,
    PromptCatalog,
};
use crate::graph::KnowledgeGraph;
use crate::llm::ScriptedBackend;
use crate::retrieval::RetrievalIndex;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Catalog(#[from] crate::agent::CatalogError),
    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
}

/// The `fixture.json` manifest.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureManifest {
    pub question_id: String,
    pub question: String,
    pub expected_answer: String,
    pub expected_attempts: usize,
    pub expected_reflections: usize,
    /// Whether the episode's judge must accept in the end.
    #[serde(default = "default_true")]
    pub expected_correct: bool,
    /// Feature names to index; empty means every schema feature.
    #[serde(default)]
    pub retrieval_fields: Vec<String>,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_true() -> bool {
    true
}

fn default_t_max() -> usize {
    10
}

fn default_n_max() -> usize {
    2
}

/// One replay assertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Human-readable mismatch description, present only on failure.
    pub detail: Option<String>,
}

impl CheckResult {
    fn pass(name: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed: true,
            detail: None,
        }
    }

    fn fail(name: impl Into<String>, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            passed: false,
            detail: Some(detail),
        }
    }
}

/// The replayed episode plus every assertion outcome.
#[derive(Debug)]
pub struct ReplayOutcome {
    pub state: EpisodeState,
    pub checks: Vec<CheckResult>,
}

impl ReplayOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One `PASS`/`FAIL` line per check, with failure details indented.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let tag = if check.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {}\n", check.name));
            if let Some(detail) = &check.detail {
                for line in detail.lines() {
                    out.push_str(&format!("     {line}\n"));
                }
            }
        }
        out
    }
}

/// Loads the fixture at `dir`, replays the episode, and evaluates all
/// golden assertions. Errors are reserved for unusable fixtures; an
/// episode that merely diverges from expectations yields failed checks.
pub fn run_replay(dir: &Path) -> Result<ReplayOutcome, ReplayError> {
    let manifest_path = dir.join("fixture.json");
    let manifest_text =
        std::fs::read_to_string(&manifest_path).map_err(|source| ReplayError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
    let manifest: FixtureManifest =
        serde_json::from_str(&manifest_text).map_err(|source| ReplayError::Manifest {
            path: manifest_path.display().to_string(),
            source,
        })?;

    let graph = KnowledgeGraph::load(&dir.join("graph.json"))?;
    let catalog = PromptCatalog::load(&dir.join("catalog"))?;
    let fields = if manifest.retrieval_fields.is_empty() {
        graph.schema().feature_types.iter().cloned().collect()
    } else {
        manifest.retrieval_fields.clone()
    };
    let index = RetrievalIndex::build(&graph, &fields)?;
    let backend = Arc::new(ScriptedBackend::from_file(dir.join("script.json"))?);

    let runner = EpisodeRunner::new(
        ActionEvaluator::new(&graph, &index),
        &catalog,
        AgentBackends::single(backend.clone()),
        EpisodeOptions {
            t_max: manifest.t_max,
            n_max: manifest.n_max,
            question_id: manifest.question_id.clone(),
            ..EpisodeOptions::default()
        },
    );
    let state = runner.run(&manifest.question, &mut NoopSink)?;

    let mut checks = Vec::new();
    checks.push(compare(
        "final answer",
        &manifest.expected_answer,
        state.final_answer.as_deref().unwrap_or("<none>"),
    ));
    checks.push(compare(
        "attempts used",
        &manifest.expected_attempts.to_string(),
        &state.attempts_used().to_string(),
    ));
    checks.push(compare(
        "reflections used",
        &manifest.expected_reflections.to_string(),
        &state.n.to_string(),
    ));
    checks.push(compare(
        "judge accepted",
        &manifest.expected_correct.to_string(),
        &state.correct.to_string(),
    ));

    for (i, attempt) in state.attempts.iter().enumerate() {
        let name = format!("scratchpad attempt {}", i + 1);
        let expected_path = dir.join("expected").join(format!("attempt{}.txt", i + 1));
        let expected = match std::fs::read_to_string(&expected_path) {
            Ok(text) => text,
            Err(source) => {
                return Err(ReplayError::Io {
                    path: expected_path.display().to_string(),
                    source,
                })
            }
        };
        let actual = render_scratchpad(&attempt.steps);
        checks.push(
            match diff_blocks(expected.trim_end_matches('\n'), &actual) {
                None => CheckResult::pass(name),
                Some(detail) => CheckResult::fail(name, detail),
            },
        );
    }

    let leftover = backend.remaining();
    checks.push(if leftover == 0 {
        CheckResult::pass("script fully consumed")
    } else {
        CheckResult::fail(
            "script fully consumed",
            format!("{leftover} scripted replies were never requested"),
        )
    });

    Ok(ReplayOutcome { state, checks })
}

fn compare(name: &str, expected: &str, actual: &str) -> CheckResult {
    if expected == actual {
        CheckResult::pass(name)
    } else {
        CheckResult::fail(name, format!("expected: {expected}\n  actual: {actual}"))
    }
}

/// Returns a first-divergent-line report, or `None` when equal.
fn diff_blocks(expected: &str, actual: &str) -> Option<String> {
    if expected == actual {
        return None;
    }
    let expected_lines: Vec<&str> = expected.lines().collect();
    let actual_lines: Vec<&str> = actual.lines().collect();
    for (i, (e, a)) in expected_lines.iter().zip(actual_lines.iter()).enumerate() {
        if e != a {
            return Some(format!(
                "first divergence at line {}:\nexpected: {e}\n  actual: {a}",
                i + 1
            ));
        }
    }
    Some(format!(
        "line {} onward: expected {} lines, got {}",
        expected_lines.len().min(actual_lines.len()) + 1,
        expected_lines.len(),
        actual_lines.len()
    ))
}
