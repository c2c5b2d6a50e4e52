use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cypher;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub id: String,
    pub question: String,
    pub gold_cypher: String,
    pub expected_answer: String,
    pub expected_nodes: Vec<serde_json::Value>,
    pub expected_relationships: Vec<serde_json::Value>,
    /// Why the gold query falls outside the supported grammar, if it does.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsupported: Option<String>,
}

impl EvalSample {
    pub fn is_supported(&self) -> bool {
        self.unsupported.is_none()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("record {index} (line {line}): {message}")]
    Record {
        index: usize,
        line: usize,
        message: String,
    },
    #[error("cannot read dataset {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    question: Option<String>,
    #[serde(alias = "gold_cypher")]
    cypher: Option<String>,
    expected_answer: Option<serde_json::Value>,
    #[serde(alias = "expected_nodes")]
    nodes: Option<Vec<serde_json::Value>>,
    #[serde(alias = "expected_relationships")]
    relationships: Option<Vec<serde_json::Value>>,
}

/// Parses one JSON object per non-blank line.
///
/// Required fields are `question` and `cypher`; `id` defaults to the
/// record's 1-based position. Gold queries the engine cannot parse are kept
/// and flagged through [`EvalSample::unsupported`].
pub fn parse_dataset(text: &str) -> Result<Vec<EvalSample>, DatasetError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let index = out.len();
        let err = |message: String| DatasetError::Record {
            index,
            line: line_no + 1,
            message,
        };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let question = raw
            .question
            .filter(|q| !q.trim().is_empty())
            .ok_or_else(|| err("missing field `question`".into()))?;
        let gold_cypher = raw
            .cypher
            .filter(|q| !q.trim().is_empty())
            .ok_or_else(|| err("missing field `cypher`".into()))?;
        let id = match raw.id {
            None => format!("{}", index + 1),
            Some(serde_json::Value::String(s)) => s,
            Some(v) => v.to_string(),
        };
        if !ids.insert(id.clone()) {
            return Err(err(format!("duplicate id `{id}`")));
        }
        let expected_answer = match raw.expected_answer {
            None => String::new(),
            Some(serde_json::Value::String(s)) => s,
            Some(v) => v.to_string(),
        };
        let unsupported = cypher::parse(&gold_cypher).err().map(|e| e.to_string());
        out.push(EvalSample {
            id,
            question,
            gold_cypher,
            expected_answer,
            expected_nodes: raw.nodes.unwrap_or_default(),
            expected_relationships: raw.relationships.unwrap_or_default(),
            unsupported,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<EvalSample>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_dataset(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records_and_flags_unsupported() {
        let text = r#"{"id": "a", "question": "Q1?", "cypher": "MATCH (n) RETURN n", "expected_answer": "x", "nodes": ["n1"], "relationships": []}

{"question": "Q2?", "cypher": "MATCH (n) WITH n RETURN n"}
"#;
        let s = parse_dataset(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].id, "a");
        assert!(s[0].is_supported());
        assert_eq!(s[1].id, "2");
        assert!(s[1].unsupported.as_deref().unwrap().contains("WITH"));
    }

    #[test]
    fn empty_file_is_empty() {
        assert!(parse_dataset("").unwrap().is_empty());
        assert!(parse_dataset("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn missing_cypher_names_the_record() {
        let text =
            "{\"question\": \"a\", \"cypher\": \"MATCH (n) RETURN n\"}\n{\"question\": \"b\"}\n";
        let e = parse_dataset(text).unwrap_err();
        assert_eq!(
            e,
            DatasetError::Record {
                index: 1,
                line: 2,
                message: "missing field `cypher`".into()
            }
        );
        assert!(e.to_string().contains("record 1"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "{\"id\": 1, \"question\": \"a\", \"cypher\": \"MATCH (n) RETURN n\"}\n{\"id\": 1, \"question\": \"b\", \"cypher\": \"MATCH (n) RETURN n\"}\n";
        assert!(parse_dataset(text).is_err());
    }
}
