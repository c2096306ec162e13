//! Prompt templates and prompt assembly.
//!
//! A catalog is a directory of five plain-text files per domain:
//! `reasoning.txt`, `reflection.txt`, `evaluation.txt`, `examples.txt`, and
//! `graph_definition.txt`. The first three are templates with
//! `{placeholder}` slots; the last two are blocks substituted into them.
//! Placeholders are checked once at load so a broken catalog fails at
//! startup instead of mid-episode.

use std::fmt;
use std::path::Path;

use crate::agent::{render_scratchpad, AgentRole, ReasoningStep};
use crate::llm::ChatTurn;

/// Preamble placed above accumulated reflections in reasoning prompts.
pub const REFLECTIONS_HEADER: &str = "You have attempted to answer following question before and failed. The following reflection(s) give a plan to avoid failing to answer the question in the same way you did previously. Use them to improve your strategy of correctly answering the given question.";

const REASONING_PLACEHOLDERS: &[&str] = &[
    "{examples}",
    "{reflections}",
    "{graph_definition}",
    "{question}",
    "{scratchpad}",
];
const REFLECTION_PLACEHOLDERS: &[&str] = &[
    "{examples}",
    "{graph_definition}",
    "{question}",
    "{scratchpad}",
];
const EVALUATION_PLACEHOLDERS: &[&str] = &[
    "{examples}",
    "{graph_definition}",
    "{question}",
    "{scratchpad}",
];

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("could not read catalog file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog template {file} is missing required placeholder {placeholder}")]
    MissingPlaceholder { file: String, placeholder: String },
}

/// The five per-domain prompt assets, validated.
#[derive(Clone)]
pub struct PromptCatalog {
    reasoning: String,
    reflection: String,
    evaluation: String,
    examples: String,
    graph_definition: String,
}

impl fmt::Debug for PromptCatalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PromptCatalog")
            .field("reasoning_len", &self.reasoning.len())
            .field("reflection_len", &self.reflection.len())
            .field("evaluation_len", &self.evaluation.len())
            .field("examples_len", &self.examples.len())
            .field("graph_definition_len", &self.graph_definition.len())
            .finish()
    }
}

impl PromptCatalog {
    /// Loads and validates a catalog directory.
    pub fn load(dir: &Path) -> Result<Self, CatalogError> {
        let read = |name: &str| -> Result<String, CatalogError> {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| CatalogError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        Self::from_parts(
            read("reasoning.txt")?,
            read("reflection.txt")?,
            read("evaluation.txt")?,
            read("examples.txt")?,
            read("graph_definition.txt")?,
        )
    }

    /// Builds a catalog from in-memory parts, applying the same placeholder
    /// validation as [`PromptCatalog::load`].
    pub fn from_parts(
        reasoning: String,
        reflection: String,
        evaluation: String,
        examples: String,
        graph_definition: String,
    ) -> Result<Self, CatalogError> {
        check_placeholders("reasoning.txt", &reasoning, REASONING_PLACEHOLDERS)?;
        check_placeholders("reflection.txt", &reflection, REFLECTION_PLACEHOLDERS)?;
        check_placeholders("evaluation.txt", &evaluation, EVALUATION_PLACEHOLDERS)?;
        Ok(PromptCatalog {
            reasoning,
            reflection,
            evaluation,
            examples,
            graph_definition,
        })
    }

    pub fn examples(&self) -> &str {
        &self.examples
    }

    pub fn graph_definition(&self) -> &str {
        &self.graph_definition
    }

    /// Assembles the prompt asking for the next `role` output. The
    /// scratchpad slot receives the rendered steps plus a bare cue line
    /// (`"Plan 3:"`) so the model continues exactly one role.
    pub fn reasoning_prompt(
        &self,
        question: &str,
        reflections: &[String],
        steps: &[ReasoningStep],
        role: AgentRole,
    ) -> Vec<ChatTurn> {
        let cue_index = match role {
            AgentRole::Plan => steps.last().map(|s| s.index + 1).unwrap_or(1),
            _ => steps.last().map(|s| s.index).unwrap_or(1),
        };
        let cue = format!("{} {}:", role.label(), cue_index);
        let rendered = render_scratchpad(steps);
        let scratchpad = if rendered.is_empty() {
            cue
        } else {
            format!("{rendered}\n{cue}")
        };
        let full = render_template(
            &self.reasoning,
            &[
                ("examples", &self.examples),
                ("reflections", &render_reflections(reflections)),
                ("graph_definition", &self.graph_definition),
                ("question", question),
                ("scratchpad", &scratchpad),
            ],
        );
        split_turns(&full)
    }

    /// Assembles the prompt asking the model to reflect on a failed attempt.
    pub fn reflection_prompt(&self, question: &str, steps: &[ReasoningStep]) -> Vec<ChatTurn> {
        let full = render_template(
            &self.reflection,
            &[
                ("examples", &self.examples),
                ("graph_definition", &self.graph_definition),
                ("question", question),
                ("scratchpad", &render_scratchpad(steps)),
            ],
        );
        split_turns(&full)
    }

    /// Assembles the prompt asking the judge to grade a finished attempt.
    pub fn evaluation_prompt(&self, question: &str, steps: &[ReasoningStep]) -> Vec<ChatTurn> {
        let full = render_template(
            &self.evaluation,
            &[
                ("examples", &self.examples),
                ("graph_definition", &self.graph_definition),
                ("question", question),
                ("scratchpad", &render_scratchpad(steps)),
            ],
        );
        split_turns(&full)
    }
}

fn check_placeholders(file: &str, template: &str, required: &[&str]) -> Result<(), CatalogError> {
    for placeholder in required {
        if !template.contains(placeholder) {
            return Err(CatalogError::MissingPlaceholder {
                file: file.to_string(),
                placeholder: (*placeholder).to_string(),
            });
        }
    }
    Ok(())
}

/// The reflections block: header, `Reflections:` line, one `- ` item per
/// stored reflection. Empty input renders as an empty string so the
/// template slot collapses.
fn render_reflections(reflections: &[String]) -> String {
    if reflections.is_empty() {
        return String::new();
    }
    let mut block = String::from(REFLECTIONS_HEADER);
    block.push_str("\nReflections:");
    for reflection in reflections {
        block.push_str("\n- ");
        block.push_str(reflection);
    }
    block
}

/// Single-pass substitution: each `{name}` in the template is replaced by
/// its value; replaced text is never rescanned, so values containing brace
/// patterns pass through untouched. Unknown `{...}` spans are kept verbatim.
fn render_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in vars {
            let token_len = name.len() + 2;
            if tail.len() >= token_len
                && tail.as_bytes()[token_len - 1] == b'}'
                && &tail[1..token_len - 1] == *name
            {
                out.push_str(value);
                rest = &tail[token_len..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

/// Splits a rendered prompt into chat turns at the last line starting with
/// `"Question: "`: everything above is the system turn, the question line
/// and what follows become the user turn. A prompt without such a line is
/// sent as a single user turn.
fn split_turns(full: &str) -> Vec<ChatTurn> {
    let mut split_at = None;
    let mut offset = 0;
    for line in full.split_inclusive('\n') {
        if line.starts_with("Question: ") {
            split_at = Some(offset);
        }
        offset += line.len();
    }
    match split_at {
        Some(0) | None => vec![ChatTurn::user(full.trim_end())],
        Some(pos) => {
            let system = full[..pos].trim_end();
            let user = full[pos..].trim_end();
            if system.is_empty() {
                vec![ChatTurn::user(user)]
            } else {
                vec![ChatTurn::system(system), ChatTurn::user(user)]
            }
        }
    }
}
