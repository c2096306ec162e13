//! Evaluation of parsed actions against a graph and retrieval index.
//!
//! Every outcome — hit, lookup miss, bad retrieval query — is rendered as
//! an [`Observation`] with fixed template text. Nothing here returns an
//! error: failures are advisory observations fed back to the model, which
//! is expected to correct course on the next step.

use crate::graph::{KnowledgeGraph, NodeId};
use crate::retrieval::{RetrievalError, RetrievalIndex};

use super::{ActionExpr, ActionList, Target};

/// Advisory shown for any node/feature lookup miss.
pub const MISS_TEXT: &str = "The node or feature name does not exist in the graph. This might because your given feature name is not correct. Please modify it.";

/// Longest neighbor list rendered in full before truncation kicks in.
pub const DEFAULT_NEIGHBOUR_CAP: usize = 50;

const NO_HIT_TEXT: &str =
    "No node in the graph matched the retrieval query. Please try a more specific query.";
const EMPTY_QUERY_TEXT: &str =
    "The retrieval query is empty. Please provide descriptive text inside Retrieve[...].";
const FINISH_TEXT: &str = "Finish does not query the graph; it ends the attempt with your answer.";

/// Whether an observation is a real result or corrective guidance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Advisory,
}

/// Rendered feedback for one step. `text` is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub text: String,
    pub outcome: Outcome,
}

impl Observation {
    pub fn ok(text: impl Into<String>) -> Self {
        Observation {
            text: text.into(),
            outcome: Outcome::Ok,
        }
    }

    pub fn advisory(text: impl Into<String>) -> Self {
        Observation {
            text: text.into(),
            outcome: Outcome::Advisory,
        }
    }

    pub fn is_advisory(&self) -> bool {
        self.outcome == Outcome::Advisory
    }
}

/// Python-style list rendering used by the neighbor template. Lists longer
/// than `cap` are cut with an ellipsis and a total count.
fn render_node_list(ids: &[NodeId], cap: usize) -> String {
    let quoted: Vec<String> = ids
        .iter()
        .take(cap)
        .map(|id| format!("'{}'", id.as_str()))
        .collect();
    if ids.len() <= cap {
        format!("[{}]", quoted.join(", "))
    } else {
        format!("[{}, ...] ({} nodes total)", quoted.join(", "), ids.len())
    }
}

/// Evaluates actions against one immutable graph + index pair.
pub struct ActionEvaluator<'a> {
    graph: &'a KnowledgeGraph,
    index: &'a RetrievalIndex,
    neighbour_cap: usize,
}

impl<'a> ActionEvaluator<'a> {
    pub fn new(graph: &'a KnowledgeGraph, index: &'a RetrievalIndex) -> Self {
        ActionEvaluator {
            graph,
            index,
            neighbour_cap: DEFAULT_NEIGHBOUR_CAP,
        }
    }

    pub fn with_neighbour_cap(mut self, cap: usize) -> Self {
        self.neighbour_cap = cap;
        self
    }

    /// Resolves a target to a node id, plus the retrieval sentence to
    /// prepend when the target was an inner `Retrieve`.
    fn resolve_target(&self, target: &Target) -> Result<(String, Option<String>), Observation> {
        match target {
            Target::Node(id) => Ok((id.clone(), None)),
            Target::Retrieve(query) => match self.index.retrieve_top1(query) {
                Ok(Some(hit)) => {
                    let sentence = format!("The ID of this retrieval target node is {}.", hit.node);
                    Ok((hit.node.as_str().to_string(), Some(sentence)))
                }
                Ok(None) => Err(Observation::advisory(NO_HIT_TEXT)),
                Err(RetrievalError::EmptyQuery) => Err(Observation::advisory(EMPTY_QUERY_TEXT)),
                Err(other) => Err(Observation::advisory(other.to_string())),
            },
        }
    }

    /// Renders one action's observation. Compound actions evaluate the
    /// inner `Retrieve` first and prepend its sentence to the outer result.
    pub fn eval(&self, expr: &ActionExpr) -> Observation {
        match expr {
            ActionExpr::Retrieve(query) => {
                match self.resolve_target(&Target::Retrieve(query.clone())) {
                    Ok((_, sentence)) => Observation::ok(sentence.expect("retrieve sentence")),
                    Err(obs) => obs,
                }
            }
            ActionExpr::Feature { target, feature } => self.eval_lookup(target, |id| {
                self.graph
                    .get_feature(id, feature)
                    .map(|value| format!("The {feature} feature of {id} are: {value}."))
            }),
            ActionExpr::Neighbour { target, label } => self.eval_lookup(target, |id| {
                self.graph.get_neighbours(id, label).map(|ids| {
                    format!(
                        "The {label} neighbors of {id} are: {}.",
                        render_node_list(ids, self.neighbour_cap)
                    )
                })
            }),
            ActionExpr::Degree { target, label } => self.eval_lookup(target, |id| {
                self.graph
                    .get_degree(id, label)
                    .map(|count| format!("The number of {label} neighbors of {id} is {count}."))
            }),
            // The orchestrator intercepts Finish before evaluation; kept
            // total so stray calls still yield guidance instead of a panic.
            ActionExpr::Finish(_) => Observation::advisory(FINISH_TEXT),
        }
    }

    fn eval_lookup<F>(&self, target: &Target, lookup: F) -> Observation
    where
        F: FnOnce(&str) -> Result<String, crate::graph::LookupMiss>,
    {
        let (id, retrieve_sentence) = match self.resolve_target(target) {
            Ok(resolved) => resolved,
            Err(obs) => return obs,
        };
        let outer = match lookup(&id) {
            Ok(text) => Observation::ok(text),
            Err(_) => Observation::advisory(MISS_TEXT),
        };
        match retrieve_sentence {
            None => outer,
            Some(sentence) => Observation {
                text: format!("{sentence} {}", outer.text),
                outcome: outer.outcome,
            },
        }
    }

    /// Evaluates parallel actions left-to-right, joining their texts with a
    /// single space. Advisory if any element was advisory.
    pub fn eval_list(&self, list: &ActionList) -> Observation {
        let parts: Vec<Observation> = list.exprs().iter().map(|e| self.eval(e)).collect();
        let outcome = if parts.iter().any(Observation::is_advisory) {
            Outcome::Advisory
        } else {
            Outcome::Ok
        };
        Observation {
            text: parts
                .iter()
                .map(|o| o.text.as_str())
                .collect::<Vec<_>>()
                .join(" "),
            outcome,
        }
    }
}
