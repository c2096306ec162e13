//! The reasoning agent: shared state types, the plan/thought/action role
//! cycle, scratchpad rendering, model-reply cleanup, and verdict parsing.
//!
//! One episode alternates two loops. The inner loop asks the model for a
//! Plan, a Thought, and an Action per step, evaluates the action against
//! the graph, and feeds the observation back — until the model emits
//! `Finish[answer]` or the step budget runs out. The outer loop judges a
//! produced answer and, on failure, asks the model to reflect; accumulated
//! reflections are prepended to the next attempt's context while the step
//! scratchpad starts over. [`episode::EpisodeRunner`] wires it together.

mod catalog;
mod episode;

pub use catalog::{CatalogError, PromptCatalog, REFLECTIONS_HEADER};
pub use episode::{AgentBackends, AttemptRecord, EpisodeOptions, EpisodeRunner, EpisodeState};

use std::io;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::actions::{parse_actions, Observation};

/// Which output the model is asked for next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentRole {
    Plan,
    Thought,
    Action,
}

impl AgentRole {
    pub fn label(self) -> &'static str {
        match self {
            AgentRole::Plan => "Plan",
            AgentRole::Thought => "Thought",
            AgentRole::Action => "Action",
        }
    }
}

/// One step of one attempt. `thought`/`action_raw` are filled as the step
/// progresses; `observation` stays empty for the terminal `Finish` step,
/// which records `finish_answer` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningStep {
    pub index: usize,
    pub plan: String,
    pub thought: Option<String>,
    pub action_raw: Option<String>,
    pub observation: Option<Observation>,
    pub finish_answer: Option<String>,
}

impl ReasoningStep {
    pub fn begun(index: usize, plan: String) -> Self {
        ReasoningStep {
            index,
            plan,
            thought: None,
            action_raw: None,
            observation: None,
            finish_answer: None,
        }
    }
}

/// Steps of the current attempt plus every reflection gathered so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReasoningTrace {
    pub question: String,
    pub steps: Vec<ReasoningStep>,
    pub reflections: Vec<String>,
}

/// The role cycle: plan at the start and after each completed step,
/// thought after a plan, action after a thought.
pub fn next_role(steps: &[ReasoningStep]) -> AgentRole {
    match steps.last() {
        None => AgentRole::Plan,
        Some(step) if step.thought.is_none() => AgentRole::Thought,
        Some(step) if step.action_raw.is_none() => AgentRole::Action,
        Some(_) => AgentRole::Plan,
    }
}

/// Renders steps as the canonical scratchpad block: one line per role,
/// `"{Role} {t}: {text}"`, joined with newlines and no trailing newline.
/// A `Finish` step closes with the answer echo line instead of a graph
/// observation.
pub fn render_scratchpad(steps: &[ReasoningStep]) -> String {
    let mut lines = Vec::new();
    for step in steps {
        let t = step.index;
        lines.push(format!("Plan {t}: {}", step.plan));
        if let Some(thought) = &step.thought {
            lines.push(format!("Thought {t}: {thought}"));
        }
        if let Some(action) = &step.action_raw {
            lines.push(format!("Action {t}: {action}"));
        }
        if let Some(answer) = &step.finish_answer {
            lines.push(format!("Observation {t}: Answer is {answer}"));
        } else if let Some(obs) = &step.observation {
            lines.push(format!("Observation {t}: {}", obs.text));
        }
    }
    lines.join("\n")
}

fn truncate_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?m)^\s*(Plan|Thought|Action|Observation)(\s+\d+)?\s*:").expect("static regex")
    })
}

fn prefix_regex(role: AgentRole) -> &'static Regex {
    static PLAN: OnceLock<Regex> = OnceLock::new();
    static THOUGHT: OnceLock<Regex> = OnceLock::new();
    static ACTION: OnceLock<Regex> = OnceLock::new();
    let (cell, label) = match role {
        AgentRole::Plan => (&PLAN, "Plan"),
        AgentRole::Thought => (&THOUGHT, "Thought"),
        AgentRole::Action => (&ACTION, "Action"),
    };
    cell.get_or_init(|| {
        Regex::new(&format!(r"(?i)^\s*{label}(\s+\d+)?\s*:\s*")).expect("static regex")
    })
}

/// Cleans one role reply: drops an echoed own-role label ("Plan 2: …"),
/// cuts everything from the next role label onward (the model must produce
/// only one role per call; anything further is discarded so the state
/// machine stays authoritative), and trims the result.
pub fn sanitize_reply(role: AgentRole, raw: &str) -> String {
    let trimmed = raw.trim();
    let body = match prefix_regex(role).find(trimmed) {
        Some(m) => &trimmed[m.end()..],
        None => trimmed,
    };
    // A label at position 0 is the content itself (e.g. a mislabeled
    // reply); only a later label marks run-ahead output to cut.
    let cut = truncate_regex()
        .find_iter(body)
        .find(|m| m.start() > 0)
        .map(|m| m.start())
        .unwrap_or(body.len());
    body[..cut].trim().to_string()
}

/// Extracts the answer from a `Finish[...]` action line: the bracket
/// interior, end-trimmed, commas preserved. `None` when the line is not a
/// lone well-formed `Finish`.
pub fn regularize(action_raw: &str) -> Option<String> {
    parse_actions(action_raw)
        .ok()
        .and_then(|list| list.finish_answer().map(str::to_string))
}

/// Rightmost-token verdict scan: `Some(true)` when the last `[yes]`/`[no]`
/// occurrence (case-insensitive) is `[yes]`, `None` when neither appears.
pub fn judge_verdict(reply: &str) -> Option<bool> {
    let lower = reply.to_lowercase();
    match (lower.rfind("[yes]"), lower.rfind("[no]")) {
        (Some(y), Some(n)) => Some(y > n),
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (None, None) => None,
    }
}

/// Marker ending a reflection reply; text beyond it is discarded.
pub const END_OF_REFLECTION: &str = "(end of reflection)";

/// Trims a reflection reply: strips an echoed "Reflection:" label and cuts
/// after the end marker (kept, in its original casing) when present.
pub fn sanitize_reflection(raw: &str) -> String {
    static PREFIX: OnceLock<Regex> = OnceLock::new();
    let prefix =
        PREFIX.get_or_init(|| Regex::new(r"(?i)^\s*Reflections?\s*:\s*").expect("static regex"));
    let trimmed = raw.trim();
    let body = match prefix.find(trimmed) {
        Some(m) => &trimmed[m.end()..],
        None => trimmed,
    };
    match body.to_lowercase().find(END_OF_REFLECTION) {
        Some(pos) => body[..pos + END_OF_REFLECTION.len()].trim().to_string(),
        None => body.trim().to_string(),
    }
}

/// One audit-log row. Every role output, observation, reflection, and
/// judge reply becomes one record; `t` is 0 for records outside a step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub question_id: String,
    pub attempt: usize,
    pub t: usize,
    pub role: String,
    pub text: String,
}

/// Receives step records as an episode runs.
pub trait TraceSink {
    fn record(&mut self, record: &StepRecord);
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NoopSink;

impl TraceSink for NoopSink {
    fn record(&mut self, _: &StepRecord) {}
}

/// Collects records in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<StepRecord>,
}

impl TraceSink for MemorySink {
    fn record(&mut self, record: &StepRecord) {
        self.records.push(record.clone());
    }
}

/// Streams records as newline-delimited JSON.
pub struct JsonlSink<W: io::Write> {
    writer: W,
}

impl<W: io::Write> JsonlSink<W> {
    pub fn new(writer: W) -> Self {
        JsonlSink { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: io::Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, record: &StepRecord) {
        // Log-shaped output: serialization problems are reported, never fatal.
        match serde_json::to_string(record) {
            Ok(line) => {
                if let Err(e) = writeln!(self.writer, "{line}") {
                    log::error!("could not write step record: {e}");
                }
            }
            Err(e) => log::error!("could not serialize step record: {e}"),
        }
    }
}
