//! Shared text normalization for retrieval scoring and answer metrics.

/// Lowercases and splits text into tokens, stripping punctuation.
///
/// Hyphens between alphanumerics survive (`CC-3068` stays one token);
/// every other non-alphanumeric character acts as a separator. Leading
/// and trailing hyphens are stripped from each token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '-')
        .map(|raw| raw.trim_matches('-'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
