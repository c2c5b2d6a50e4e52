//! Cypher subset: parsing, canonical formatting, execution and rewrites.
//!
//! Supported: one or more MATCH clauses (multi-hop chains in any direction,
//! inline property maps, optional WHERE each), WHERE expressions with
//! comparisons, AND/OR/NOT, IN, CONTAINS/STARTS WITH/ENDS WITH, IS NULL,
//! EXISTS and COUNT subpatterns, RETURN with DISTINCT, aliases and
//! `count(...)`, ORDER BY and LIMIT. Anything else is a [`ParseError`]
//! naming the construct.

pub mod ast;
mod exec;
mod format;
mod lexer;
mod parser;
mod rewrite;
mod value;

use std::fmt;

use thiserror::Error;

use crate::graph::PropertyGraph;

pub use ast::Query;
pub use exec::execute;
pub use format::{format, format_chain, format_expr, format_literal, quote_string};
pub use parser::parse;
pub use rewrite::{rewrite_return_all_bound, topology_signature};
pub use value::{normalize_float, ResultTable, Value};

/// Byte spans of the tokens of `text`, or `None` if it does not tokenize.
pub(crate) fn token_spans(text: &str) -> Option<Vec<(usize, usize)>> {
    let tokens = lexer::tokenize(text).ok()?;
    Some(
        tokens
            .iter()
            .filter(|t| t.tok != lexer::Tok::Eof)
            .map(|t| (t.start, t.end))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Character offset into the query text.
    pub position: usize,
    pub message: String,
    pub found: Option<String>,
    pub expected: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at offset {}: {}",
            self.position, self.message
        )?;
        match (&self.found, &self.expected) {
            (Some(found), Some(exp)) => write!(f, " (found {found}, expected {exp})"),
            (Some(found), None) => write!(f, " (found {found})"),
            _ => Ok(()),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("graph backend failed: {0}")]
    Backend(String),
}

/// Executes query text against some graph store.
///
/// The embedded [`PropertyGraph`] is the reference implementation; a remote
/// database adapter submits the text over its wire protocol and decodes the
/// reply into columns and rows of scalars, node maps and edge maps (see
/// [`Value::from_json`]).
pub trait GraphStore: Send + Sync {
    fn run(&self, query_text: &str) -> Result<ResultTable, QueryError>;
}

impl GraphStore for PropertyGraph {
    fn run(&self, query_text: &str) -> Result<ResultTable, QueryError> {
        let q = parse(query_text)?;
        Ok(execute(&q, self))
    }
}

/// Decodes an adapter reply of the form
/// `{"columns": [...], "rows": [[...], ...]}`.
pub fn decode_result(reply: &str) -> Result<ResultTable, QueryError> {
    let table: ResultTable =
        serde_json::from_str(reply).map_err(|e| QueryError::Backend(e.to_string()))?;
    if let Some(bad) = table
        .rows
        .iter()
        .position(|r| r.len() != table.columns.len())
    {
        return Err(QueryError::Backend(format!(
            "row {bad} has a different width than the column list"
        )));
    }
    Ok(table)
}
