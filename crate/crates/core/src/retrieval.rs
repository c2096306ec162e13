//! Lexical node retrieval: resolve a free-text query to the single most
//! relevant node identifier.
//!
//! Each node is indexed under the concatenation of its values for a declared
//! list of feature types. Scoring is pluggable behind [`Scorer`]; the default
//! is a BM25 ranking over the shared tokenizer's output. The agent loop only
//! ever needs the top hit, but a top-k entry point is kept for tooling.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{KnowledgeGraph, NodeId};
use crate::text::tokenize;

/// Corpus-level statistics handed to scorers alongside each document.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    doc_count: usize,
    avg_doc_len: f64,
    doc_freq: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    /// Mean token count per indexed document (0.0 for an empty corpus).
    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    /// Number of documents containing `term` at least once.
    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }
}

/// Text-similarity plug-in: `(query tokens, document tokens, corpus stats)`
/// to a finite real score. Implementations must be deterministic for fixed
/// inputs; ranking and tie-breaking live in the index, not the scorer.
pub trait Scorer: Send + Sync {
    fn score(&self, query_tokens: &[String], doc_tokens: &[String], stats: &CorpusStats) -> f64;
}

/// BM25 with the non-negative idf variant, so a term matching most of the
/// corpus still contributes a small positive amount rather than flipping
/// the ranking with negative weights.
#[derive(Debug, Clone)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25 {
    fn default() -> Self {
        Bm25 { k1: 1.2, b: 0.75 }
    }
}

impl Scorer for Bm25 {
    fn score(&self, query_tokens: &[String], doc_tokens: &[String], stats: &CorpusStats) -> f64 {
        if doc_tokens.is_empty() {
            return 0.0;
        }
        let n = stats.doc_count() as f64;
        let avg_len = if stats.avg_doc_len() > 0.0 {
            stats.avg_doc_len()
        } else {
            1.0
        };
        let len_norm = 1.0 - self.b + self.b * doc_tokens.len() as f64 / avg_len;
        let mut total = 0.0;
        for term in query_tokens {
            let tf = doc_tokens.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = stats.doc_freq(term) as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            total += idf * (tf * (self.k1 + 1.0)) / (tf + self.k1 * len_norm);
        }
        total
    }
}

/// Named scorer lookup used when wiring a run configuration.
#[derive(Default)]
pub struct ScorerRegistry {
    entries: BTreeMap<String, Arc<dyn Scorer>>,
}

impl ScorerRegistry {
    /// Registry preloaded with the built-in `"bm25"` scorer.
    pub fn with_defaults() -> Self {
        let mut reg = ScorerRegistry::default();
        reg.register("bm25", Arc::new(Bm25::default()));
        reg
    }

    pub fn register(&mut self, name: impl Into<String>, scorer: Arc<dyn Scorer>) {
        self.entries.insert(name.into(), scorer);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Scorer>> {
        self.entries.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("retrieval field list must be non-empty")]
    EmptyFields,
    #[error("retrieval field {0:?} is not a feature type of the graph")]
    UnknownField(String),
    #[error("retrieval query is empty")]
    EmptyQuery,
}

/// One ranked answer from the index.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit {
    pub node: NodeId,
    pub score: f64,
}

#[derive(Debug)]
struct IndexedDoc {
    node: NodeId,
    tokens: Vec<String>,
}

/// Immutable searchable view over one graph's nodes.
pub struct RetrievalIndex {
    docs: Vec<IndexedDoc>,
    stats: CorpusStats,
    scorer: Arc<dyn Scorer>,
}

impl std::fmt::Debug for RetrievalIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RetrievalIndex")
            .field("docs", &self.docs.len())
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl RetrievalIndex {
    /// Indexes every node of `graph` under its `fields` values joined in the
    /// given order, scored with the default BM25 scorer.
    ///
    /// Fields must exist in the graph schema; on an empty graph that check
    /// is vacuous (there is nothing to index, every query is a no-hit).
    pub fn build(graph: &KnowledgeGraph, fields: &[String]) -> Result<Self, RetrievalError> {
        Self::build_with_scorer(graph, fields, Arc::new(Bm25::default()))
    }

    pub fn build_with_scorer(
        graph: &KnowledgeGraph,
        fields: &[String],
        scorer: Arc<dyn Scorer>,
    ) -> Result<Self, RetrievalError> {
        if fields.is_empty() {
            return Err(RetrievalError::EmptyFields);
        }
        if graph.node_count() > 0 {
            for field in fields {
                if !graph.schema().feature_types.contains(field) {
                    return Err(RetrievalError::UnknownField(field.clone()));
                }
            }
        }

        let mut docs = Vec::with_capacity(graph.node_count());
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        let mut total_len = 0usize;
        for (id, features) in graph.nodes() {
            let mut parts = Vec::new();
            for field in fields {
                match features.get(field) {
                    Some(value) if !value.is_empty() => parts.push(value),
                    _ => {}
                }
            }
            let tokens = tokenize(&parts.join(" "));
            total_len += tokens.len();
            let mut seen: Vec<&String> = Vec::new();
            for token in &tokens {
                if !seen.contains(&token) {
                    seen.push(token);
                    *doc_freq.entry(token.clone()).or_insert(0) += 1;
                }
            }
            docs.push(IndexedDoc {
                node: id.clone(),
                tokens,
            });
        }

        let doc_count = docs.len();
        let stats = CorpusStats {
            doc_count,
            avg_doc_len: if doc_count > 0 {
                total_len as f64 / doc_count as f64
            } else {
                0.0
            },
            doc_freq,
        };
        Ok(RetrievalIndex {
            docs,
            stats,
            scorer,
        })
    }

    /// Highest-scoring node for `query`, or `None` when the index is empty
    /// or nothing scores above zero. Ties go to the lexicographically
    /// smallest node identifier.
    pub fn retrieve_top1(&self, query: &str) -> Result<Option<RetrievalHit>, RetrievalError> {
        Ok(self.retrieve_top_k(query, 1)?.into_iter().next())
    }

    /// Top `k` hits, score-descending then id-ascending. Unused by the agent
    /// loop, which only consumes the top hit.
    pub fn retrieve_top_k(
        &self,
        query: &str,
        k: usize,
    ) -> Result<Vec<RetrievalHit>, RetrievalError> {
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let query_tokens = tokenize(query);
        let mut hits: Vec<RetrievalHit> = self
            .docs
            .iter()
            .map(|doc| RetrievalHit {
                node: doc.node.clone(),
                score: self.scorer.score(&query_tokens, &doc.tokens, &self.stats),
            })
            .filter(|hit| hit.score > 0.0)
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.node.cmp(&b.node))
        });
        hits.truncate(k);
        Ok(hits)
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }
}
