//! Parser for the bracketed action language.
//!
//! Parsing is deliberately forgiving about layout — whitespace around
//! brackets and commas is insignificant, function names match
//! case-insensitively, `Neighbor` is accepted for `Neighbour`, and a
//! trailing comma is tolerated — but strict about structure. Every error
//! carries an advisory, model-facing message: the orchestrator feeds it
//! back as an Observation so the model can correct itself in-band.

use thiserror::Error;

use super::{ActionExpr, ActionList, Target};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("No action was provided. Please provide one action such as Retrieve[query] or Finish[answer].")]
    Empty,
    #[error("The action has unbalanced square brackets. Please rewrite it so every '[' is closed by a matching ']'.")]
    Unbalanced,
    #[error("The action could not be understood. Write actions as Function[arguments], for example Feature[node_id, feature_name].")]
    Malformed,
    #[error(
        "Invalid function name. Valid functions are Retrieve, Feature, Degree, Neighbour, Finish."
    )]
    UnknownFunction(String),
    #[error(
        "The {function} function requires exactly two arguments, like {usage}. Please modify it."
    )]
    WrongArity {
        function: &'static str,
        usage: &'static str,
    },
    #[error("Only Retrieve can be nested inside another function, and at most two functions can be combined, like Feature[Retrieve[query], feature_name]. Please modify it.")]
    InnerNotRetrieve,
    #[error(
        "Finish must be the only action in the step. Please provide Finish[answer] by itself."
    )]
    FinishCombined,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Function {
    Retrieve,
    Feature,
    Neighbour,
    Degree,
    Finish,
}

fn function_by_name(name: &str) -> Option<Function> {
    match name.to_ascii_lowercase().as_str() {
        "retrieve" => Some(Function::Retrieve),
        "feature" => Some(Function::Feature),
        "neighbour" | "neighbor" => Some(Function::Neighbour),
        "degree" => Some(Function::Degree),
        "finish" => Some(Function::Finish),
        _ => None,
    }
}

/// Splits on commas that sit outside every bracket pair. Rejects any
/// segment-level bracket imbalance; empty segments (trailing commas,
/// doubled commas) are dropped.
fn split_top_level(raw: &str) -> Result<Vec<&str>, ParseError> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in raw.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth = depth.checked_sub(1).ok_or(ParseError::Unbalanced)?;
            }
            ',' if depth == 0 => {
                parts.push(&raw[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(ParseError::Unbalanced);
    }
    parts.push(&raw[start..]);
    Ok(parts
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect())
}

/// Matches `Name[interior]` covering all of `text`: the name before the
/// first `[`, the interior up to its matching `]`, nothing after.
fn call_shape(text: &str) -> Result<Option<(&str, &str)>, ParseError> {
    let Some(open) = text.find('[') else {
        return Ok(None);
    };
    let name = text[..open].trim();
    let mut depth = 0usize;
    for (i, c) in text.char_indices().skip(open) {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    if !text[i + 1..].trim().is_empty() {
                        return Err(ParseError::Malformed);
                    }
                    return Ok(Some((name, &text[open + 1..i])));
                }
            }
            _ => {}
        }
    }
    Err(ParseError::Unbalanced)
}

fn parse_target(arg: &str) -> Result<Target, ParseError> {
    match call_shape(arg)? {
        None => Ok(Target::Node(arg.to_string())),
        Some((name, interior)) => match function_by_name(name) {
            Some(Function::Retrieve) => Ok(Target::Retrieve(interior.trim().to_string())),
            Some(_) => Err(ParseError::InnerNotRetrieve),
            None => Err(ParseError::UnknownFunction(name.to_string())),
        },
    }
}

fn parse_two_args(
    interior: &str,
    function: &'static str,
    usage: &'static str,
) -> Result<(Target, String), ParseError> {
    let args = split_top_level(interior)?;
    let [target, second] = args.as_slice() else {
        return Err(ParseError::WrongArity { function, usage });
    };
    Ok((parse_target(target)?, second.to_string()))
}

fn parse_expr(text: &str) -> Result<ActionExpr, ParseError> {
    let Some((name, interior)) = call_shape(text)? else {
        return Err(ParseError::Malformed);
    };
    if name.is_empty() {
        return Err(ParseError::Malformed);
    }
    let Some(function) = function_by_name(name) else {
        return Err(ParseError::UnknownFunction(name.to_string()));
    };
    match function {
        // Retrieve and Finish interiors are verbatim apart from end-trimming:
        // queries and answers may contain commas and nested balanced brackets.
        Function::Retrieve => Ok(ActionExpr::Retrieve(interior.trim().to_string())),
        Function::Finish => Ok(ActionExpr::Finish(interior.trim().to_string())),
        Function::Feature => {
            let (target, feature) =
                parse_two_args(interior, "Feature", "Feature[node_id, feature_name]")?;
            Ok(ActionExpr::Feature { target, feature })
        }
        Function::Neighbour => {
            let (target, label) =
                parse_two_args(interior, "Neighbour", "Neighbour[node_id, neighbor_type]")?;
            Ok(ActionExpr::Neighbour { target, label })
        }
        Function::Degree => {
            let (target, label) =
                parse_two_args(interior, "Degree", "Degree[node_id, neighbor_type]")?;
            Ok(ActionExpr::Degree { target, label })
        }
    }
}

/// Parses one step's action text (role label already stripped) into its
/// parallel actions.
pub fn parse_actions(raw: &str) -> Result<ActionList, ParseError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(ParseError::Empty);
    }
    let parts = split_top_level(raw)?;
    if parts.is_empty() {
        return Err(ParseError::Empty);
    }
    let exprs = parts
        .into_iter()
        .map(parse_expr)
        .collect::<Result<Vec<_>, _>>()?;
    ActionList::new(exprs)
}
