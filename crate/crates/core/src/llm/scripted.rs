//! Deterministic scripted backend for offline tests and transcript replay.
//!
//! A script is an ordered list of `(expect, reply)` entries. Each call
//! consumes exactly one entry; when `expect` is a substring, the last user
//! turn of the incoming prompt must contain it, otherwise the call fails
//! loudly — a silent skip would let a drifted prompt pass a golden test.

use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{validate_turns, ChatBackend, ChatTurn, GenerationParams, LlmError, Role};

/// What an entry demands of the prompt it answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptMatch {
    /// The last user turn must contain this substring.
    Contains(String),
    /// Any prompt is accepted.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub expect: ScriptMatch,
    pub reply: String,
}

impl ScriptEntry {
    pub fn expecting(expect: impl Into<String>, reply: impl Into<String>) -> Self {
        ScriptEntry {
            expect: ScriptMatch::Contains(expect.into()),
            reply: reply.into(),
        }
    }

    pub fn any(reply: impl Into<String>) -> Self {
        ScriptEntry {
            expect: ScriptMatch::Any,
            reply: reply.into(),
        }
    }
}

#[derive(Deserialize)]
struct RawEntry {
    #[serde(default)]
    expect: Option<String>,
    reply: String,
}

/// Strictly sequential canned backend. Not to be shared across parallel
/// episodes — each worker needs its own script.
#[derive(Debug)]
pub struct ScriptedBackend {
    entries: Vec<ScriptEntry>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        ScriptedBackend {
            entries,
            cursor: Mutex::new(0),
        }
    }

    /// Replies with no prompt expectations, in order.
    pub fn from_replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(replies.into_iter().map(ScriptEntry::any).collect())
    }

    /// Loads a script from a JSON array of `{"expect": …, "reply": …}`
    /// objects; a missing or null `expect` is a wildcard.
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let raw: Vec<RawEntry> =
            serde_json::from_str(text).map_err(|e| LlmError::ScriptLoad(e.to_string()))?;
        Ok(Self::new(
            raw.into_iter()
                .map(|e| ScriptEntry {
                    expect: match e.expect {
                        Some(s) => ScriptMatch::Contains(s),
                        None => ScriptMatch::Any,
                    },
                    reply: e.reply,
                })
                .collect(),
        ))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::ScriptLoad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Entries consumed so far.
    pub fn consumed(&self) -> usize {
        *self.cursor.lock().expect("script cursor poisoned")
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.consumed()
    }
}

fn last_user_content(turns: &[ChatTurn]) -> &str {
    turns
        .iter()
        .rev()
        .find(|t| t.role == Role::User)
        .map(|t| t.content.as_str())
        .unwrap_or("")
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, turns: &[ChatTurn], _params: &GenerationParams) -> Result<String, LlmError> {
        validate_turns(turns)?;
        let mut cursor = self.cursor.lock().expect("script cursor poisoned");
        let index = *cursor;
        let entry = self.entries.get(index).ok_or(LlmError::ScriptExhausted {
            consumed: self.entries.len(),
        })?;
        if let ScriptMatch::Contains(expected) = &entry.expect {
            let got = last_user_content(turns);
            if !got.contains(expected.as_str()) {
                return Err(LlmError::ScriptMismatch {
                    index,
                    expected: expected.clone(),
                    got: got.to_string(),
                });
            }
        }
        *cursor += 1;
        Ok(entry.reply.clone())
    }
}
