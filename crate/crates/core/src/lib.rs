//! Hybrid question answering over a biomedical property graph.
//!
//! A question is translated into a Cypher-subset query by a chat backend,
//! hardened by a chain of deterministic rewrites, executed against an
//! in-memory [`graph::PropertyGraph`], and verbalized from the returned rows.
//! Every intermediate artifact is kept in an [`pipeline::EvidenceBundle`].
//!
//! The [`eval`] module scores generated queries against gold queries and
//! classifies answers produced from deliberately wrong graph results.

pub mod cypher;
pub mod entity;
pub mod eval;
pub mod graph;
pub mod llm;
pub mod pipeline;
pub mod preprocess;
