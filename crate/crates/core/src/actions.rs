//! The bracketed graph-action language emitted by the execution role.
//!
//! Five functions exist: `Retrieve[query]`, `Feature[target, feature]`,
//! `Neighbour[target, label]`, `Degree[target, label]`, `Finish[answer]`.
//! A target is either a node-id literal or a nested `Retrieve[...]` — the
//! only function allowed in the inner position, bounding composition at two
//! levels. One step may carry several comma-separated actions in parallel,
//! except `Finish`, which must stand alone.
//!
//! Parsing ([`parse_actions`]) and evaluation ([`ActionEvaluator`]) are
//! split so the orchestrator can intercept `Finish` before any graph call.

mod eval;
mod parse;

pub use eval::{ActionEvaluator, Observation, Outcome, DEFAULT_NEIGHBOUR_CAP, MISS_TEXT};
pub use parse::{parse_actions, ParseError};

use std::fmt;

/// Inner position of a compound action: a literal node id, or a `Retrieve`
/// whose hit is threaded into the outer call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Node(String),
    Retrieve(String),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Node(id) => f.write_str(id),
            Target::Retrieve(query) => write!(f, "Retrieve[{query}]"),
        }
    }
}

/// One parsed action. `Retrieve` and `Finish` interiors are verbatim text
/// (trimmed at the ends only), so queries keep embedded commas and hyphens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionExpr {
    Retrieve(String),
    Feature { target: Target, feature: String },
    Neighbour { target: Target, label: String },
    Degree { target: Target, label: String },
    Finish(String),
}

impl ActionExpr {
    pub fn is_finish(&self) -> bool {
        matches!(self, ActionExpr::Finish(_))
    }
}

impl fmt::Display for ActionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionExpr::Retrieve(query) => write!(f, "Retrieve[{query}]"),
            ActionExpr::Feature { target, feature } => write!(f, "Feature[{target}, {feature}]"),
            ActionExpr::Neighbour { target, label } => write!(f, "Neighbour[{target}, {label}]"),
            ActionExpr::Degree { target, label } => write!(f, "Degree[{target}, {label}]"),
            ActionExpr::Finish(answer) => write!(f, "Finish[{answer}]"),
        }
    }
}

/// The parallel actions of one step. Non-empty; a `Finish` is always alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionList {
    exprs: Vec<ActionExpr>,
}

impl ActionList {
    /// Wraps pre-built expressions, enforcing the structural invariants the
    /// parser guarantees for its own output.
    pub fn new(exprs: Vec<ActionExpr>) -> Result<Self, ParseError> {
        if exprs.is_empty() {
            return Err(ParseError::Empty);
        }
        if exprs.len() > 1 && exprs.iter().any(ActionExpr::is_finish) {
            return Err(ParseError::FinishCombined);
        }
        Ok(ActionList { exprs })
    }

    pub fn exprs(&self) -> &[ActionExpr] {
        &self.exprs
    }

    /// The answer text when this step is a lone `Finish`.
    pub fn finish_answer(&self) -> Option<&str> {
        match self.exprs.as_slice() {
            [ActionExpr::Finish(answer)] => Some(answer.as_str()),
            _ => None,
        }
    }
}

impl fmt::Display for ActionList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, expr) in self.exprs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{expr}")?;
        }
        Ok(())
    }
}

/// Canonical text for an expression; [`parse_actions`] round-trips it.
pub fn render_expr(expr: &ActionExpr) -> String {
    expr.to_string()
}

/// Canonical text for a whole step, parallel actions joined with ", ".
pub fn render_list(list: &ActionList) -> String {
    list.to_string()
}
