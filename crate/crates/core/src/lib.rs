//! Core engine for graph-grounded question answering.
//!
//! The pipeline: a [`graph::KnowledgeGraph`] is queried through a small
//! bracketed action language ([`actions`]), with lexical entry-point lookup
//! provided by [`retrieval`]. An agent loop ([`agent`]) drives a language
//! model through an [`llm::ChatBackend`] to plan, think, and act against the
//! graph, retrying failed attempts with self-generated reflections. The
//! [`eval`] module scores final answers and runs whole benchmarks; [`replay`]
//! re-executes recorded episodes byte-for-byte for regression pinning.

pub mod actions;
pub mod agent;
pub mod config;
pub mod eval;
pub mod graph;
pub mod llm;
pub mod replay;
pub mod retrieval;
pub mod text;
