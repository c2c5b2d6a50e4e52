//! Prompt construction, chat backends and response post-processing.

mod backend;
mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cypher::ResultTable;

pub use backend::{
    network_requests, BackendError, ChatBackend, LiveBackend, LiveConfig, Reply, ScriptRule,
    ScriptedBackend,
};
pub use templates::{Template, TemplateError, TemplateSet};

pub const SCHEMA_ERROR_MARKER: &str = "SCHEMA_ERROR";
pub const SCHEMA_ERROR_FALLBACK: &str =
    "The question cannot be answered with the knowledge graph schema.";
/// Stands in for the row table when a query returned nothing.
pub const EMPTY_RESULT_MARKER: &str = "(the query returned no rows)";
pub const EE_HEADER: &str = "Entity information:";
pub const DESCRIPTIONS_HEADER: &str = "Relationship descriptions:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    CypherGen,
    Verbalize,
    SubgraphGen,
    Judge,
    /// Question sent without graph context, for the LLM-only pipeline.
    DirectAnswer,
}

impl Purpose {
    pub const ALL: [Purpose; 5] = [
        Purpose::CypherGen,
        Purpose::Verbalize,
        Purpose::SubgraphGen,
        Purpose::Judge,
        Purpose::DirectAnswer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CypherGen => "cypher_gen",
            Self::Verbalize => "verbalize",
            Self::SubgraphGen => "subgraph_gen",
            Self::Judge => "judge",
            Self::DirectAnswer => "direct_answer",
        }
    }

    /// Slots the user template must contain.
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            Self::CypherGen => &["schema", "descriptions", "entities", "question"],
            Self::Verbalize => &["question", "rows"],
            Self::SubgraphGen => &["query"],
            Self::Judge => &["question", "rows", "answer_a", "answer_b"],
            Self::DirectAnswer => &["question"],
        }
    }

    /// Generation of query text always runs at temperature 0.
    pub fn fixed_temperature(self) -> Option<f64> {
        match self {
            Self::CypherGen | Self::SubgraphGen => Some(0.0),
            _ => None,
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Purpose {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown prompt purpose `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub purpose: Purpose,
    pub system: String,
    pub user: String,
    pub filled_slots: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaErrorSignal {
    pub explanation: String,
}

/// Builds prompts from a validated [`TemplateSet`].
#[derive(Debug, Clone, Default)]
pub struct PromptBuilder {
    pub templates: TemplateSet,
}

impl PromptBuilder {
    pub fn new(templates: TemplateSet) -> Self {
        Self { templates }
    }

    fn build(&self, purpose: Purpose, slots: BTreeMap<String, String>) -> PromptBundle {
        let (system, user) = self.templates.get(purpose);
        PromptBundle {
            purpose,
            system: system.render(&slots),
            user: user.render(&slots),
            filled_slots: slots,
        }
    }

    /// Panics if `schema_text` is empty.
    pub fn cypher_prompt(
        &self,
        schema_text: &str,
        question: &str,
        ee_sentences: &[String],
        rel_descriptions_text: &str,
    ) -> PromptBundle {
        assert!(
            !schema_text.trim().is_empty(),
            "schema text must not be empty"
        );
        let descriptions = if rel_descriptions_text.trim().is_empty() {
            String::new()
        } else {
            format!(
                "{DESCRIPTIONS_HEADER}\n{}\n",
                rel_descriptions_text.trim_end()
            )
        };
        let slots = slot_map([
            ("schema", schema_text.trim_end().to_string()),
            ("descriptions", descriptions),
            ("entities", ee_block(ee_sentences)),
            ("question", question.to_string()),
        ]);
        self.build(Purpose::CypherGen, slots)
    }

    pub fn verbalization_prompt(&self, question: &str, rows: &ResultTable) -> PromptBundle {
        let slots = slot_map([
            ("question", question.to_string()),
            ("rows", render_rows(rows)),
        ]);
        self.build(Purpose::Verbalize, slots)
    }

    /// Panics if `cypher_query` is empty.
    pub fn subgraph_prompt(&self, cypher_query: &str) -> PromptBundle {
        assert!(!cypher_query.trim().is_empty(), "query must not be empty");
        self.build(
            Purpose::SubgraphGen,
            slot_map([("query", cypher_query.trim().to_string())]),
        )
    }

    pub fn judge_prompt(
        &self,
        question: &str,
        rows: &ResultTable,
        answer_a: &str,
        answer_b: &str,
    ) -> PromptBundle {
        let slots = slot_map([
            ("question", question.to_string()),
            ("rows", render_rows(rows)),
            ("answer_a", answer_a.trim().to_string()),
            ("answer_b", answer_b.trim().to_string()),
        ]);
        self.build(Purpose::Judge, slots)
    }

    pub fn direct_prompt(&self, question: &str) -> PromptBundle {
        self.build(
            Purpose::DirectAnswer,
            slot_map([("question", question.to_string())]),
        )
    }
}

fn slot_map<const N: usize>(items: [(&str, String); N]) -> BTreeMap<String, String> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// The EE block: header plus one sentence per line, or empty.
pub fn ee_block(sentences: &[String]) -> String {
    if sentences.is_empty() {
        return String::new();
    }
    let mut out = format!("{EE_HEADER}\n");
    for s in sentences {
        out.push_str(s);
        out.push('\n');
    }
    out
}

/// Row table as prompt text, or the empty-result marker line.
pub fn render_rows(rows: &ResultTable) -> String {
    if rows.is_empty() {
        format!("{EMPTY_RESULT_MARKER}\n")
    } else {
        rows.render_text()
    }
}

/// Removes a Markdown code fence around the reply, if present.
pub fn strip_code_fences(response: &str) -> String {
    let text = response.trim();
    let Some(open) = text.find("```") else {
        return text.to_string();
    };
    let after = &text[open + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    let body = match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    };
    body.trim().to_string()
}

/// Byte ranges of single- and double-quoted string literals.
fn string_literal_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let q = bytes[i];
        if q == b'"' || q == b'\'' {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i] != q {
                i += if bytes[i] == b'\\' { 2 } else { 1 };
            }
            i = (i + 1).min(bytes.len());
            spans.push((start, i));
        } else {
            i += 1;
        }
    }
    spans
}

/// Finds the marker token outside string literals and returns the text
/// after it as the explanation.
pub fn detect_schema_error(response: &str) -> Option<SchemaErrorSignal> {
    let spans = string_literal_spans(response);
    let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let bytes = response.as_bytes();
    let at = response
        .match_indices(SCHEMA_ERROR_MARKER)
        .map(|(i, _)| i)
        .find(|&i| {
            let end = i + SCHEMA_ERROR_MARKER.len();
            !spans.iter().any(|&(s, e)| s <= i && i < e)
                && (i == 0 || !is_ident(bytes[i - 1]))
                && (end == bytes.len() || !is_ident(bytes[end]))
        })?;
    let rest = response[at + SCHEMA_ERROR_MARKER.len()..]
        .trim_start_matches(|c: char| c.is_whitespace() || c == ':' || c == '-')
        .trim()
        .trim_end_matches("```")
        .trim();
    let explanation = if rest.is_empty() {
        SCHEMA_ERROR_FALLBACK.to_string()
    } else {
        rest.to_string()
    };
    Some(SchemaErrorSignal { explanation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::Value;
    use proptest::prelude::*;

    const PTERYGIUM_Q: &str = "Which drugs have pterygium as a side effect?";
    const PINK1: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[:associated_with]->(d:disease) RETURN d.id AS ID, d.name AS Name"#;
    const PINK1_SUBGRAPH: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[a:associated_with]->(d:disease) RETURN g, d, a"#;
    const SCHEMA: &str = "Graph schema\nNode types:\n(:drug) {id, name}\n(:effect) {id, name}\nRelationship types:\n(:drug)-[:side_effect]->(:effect)\n";

    fn builder() -> PromptBuilder {
        PromptBuilder::default()
    }

    #[test]
    fn cypher_prompt_embeds_schema_and_question() {
        let p = builder().cypher_prompt(SCHEMA, PTERYGIUM_Q, &[], "");
        assert_eq!(p.purpose, Purpose::CypherGen);
        assert!(p.user.contains(PTERYGIUM_Q));
        assert!(p.user.contains(SCHEMA.trim_end()));
        assert!(!p.user.contains(EE_HEADER));
        assert!(!p.user.contains(DESCRIPTIONS_HEADER));
        assert!(p.system.contains(SCHEMA_ERROR_MARKER));
        assert_eq!(p.filled_slots["question"], PTERYGIUM_Q);
    }

    #[test]
    fn ee_sentence_appears_once() {
        let s = "\"ethanol\" is of type \"drug\" in the knowledge graph.".to_string();
        let p = builder().cypher_prompt(SCHEMA, "q?", std::slice::from_ref(&s), "ppi: binding");
        assert_eq!(p.user.matches(&s).count(), 1);
        assert_eq!(p.user.matches(EE_HEADER).count(), 1);
        assert!(p
            .user
            .contains("Relationship descriptions:\nppi: binding\n"));
    }

    #[test]
    #[should_panic]
    fn empty_schema_is_rejected() {
        builder().cypher_prompt("  ", "q", &[], "");
    }

    #[test]
    fn schema_error_detection() {
        let s = detect_schema_error("SCHEMA_ERROR: the graph has no pricing information").unwrap();
        assert_eq!(s.explanation, "the graph has no pricing information");
        assert!(detect_schema_error("MATCH (n) RETURN n").is_none());
        assert_eq!(
            detect_schema_error("SCHEMA_ERROR").unwrap().explanation,
            SCHEMA_ERROR_FALLBACK
        );
        assert_eq!(
            detect_schema_error("```\nSCHEMA_ERROR - no prices\n```")
                .unwrap()
                .explanation,
            "no prices"
        );
        assert!(detect_schema_error("MATCH (n {name: \"SCHEMA_ERROR\"}) RETURN n").is_none());
        assert!(detect_schema_error("MATCH (n) WHERE n.x = 'a SCHEMA_ERROR b' RETURN n").is_none());
        assert!(detect_schema_error("NOT_A_SCHEMA_ERROR_TOKEN").is_none());
    }

    #[test]
    fn verbalization_prompt_rows() {
        let rows = ResultTable {
            columns: vec!["ID".into(), "Name".into()],
            rows: vec![
                vec![Value::Str("d1".into()), Value::Str("disease_a".into())],
                vec![Value::Str("d2".into()), Value::Str("disease_b".into())],
            ],
        };
        let q = "Which diseases are associated with pink1?";
        let p = builder().verbalization_prompt(q, &rows);
        assert!(p
            .user
            .contains("ID | Name\nd1 | disease_a\nd2 | disease_b\n"));
        assert!(p.system.contains("I don't know"));
        assert_eq!(p, builder().verbalization_prompt(q, &rows));
        let empty = builder().verbalization_prompt(q, &ResultTable::default());
        assert!(empty.user.lines().any(|l| l == EMPTY_RESULT_MARKER));
    }

    #[test]
    fn subgraph_prompt_contains_example_pair_and_task() {
        let p = builder().subgraph_prompt(PINK1);
        let all = format!("{}\n{}", p.system, p.user);
        assert!(all.contains(PINK1));
        assert!(all.contains(PINK1_SUBGRAPH));
        let other = "MATCH (d:drug) RETURN d.name";
        assert_eq!(
            builder().subgraph_prompt(other).user.matches(other).count(),
            1
        );
    }

    #[test]
    #[should_panic]
    fn empty_subgraph_query_is_rejected() {
        builder().subgraph_prompt("");
    }

    #[test]
    fn judge_prompt_labels_answers() {
        let p = builder().judge_prompt("q", &ResultTable::default(), "same", "same");
        assert!(p.user.contains("Answer A:\nsame"));
        assert!(p.user.contains("Answer B:\nsame"));
        assert!(p.system.contains("A: correct=<yes|no> complete=<yes|no>"));
    }

    #[test]
    fn code_fences() {
        assert_eq!(
            strip_code_fences("```cypher\nMATCH (n) RETURN n\n```"),
            "MATCH (n) RETURN n"
        );
        assert_eq!(
            strip_code_fences("Here:\n```\nMATCH (n)\nRETURN n\n```\nthanks"),
            "MATCH (n)\nRETURN n"
        );
        assert_eq!(
            strip_code_fences("  MATCH (n) RETURN n "),
            "MATCH (n) RETURN n"
        );
    }

    #[test]
    fn purposes_parse() {
        for p in Purpose::ALL {
            assert_eq!(p.as_str().parse::<Purpose>().unwrap(), p);
        }
        assert_eq!(Purpose::CypherGen.fixed_temperature(), Some(0.0));
        assert_eq!(Purpose::Verbalize.fixed_temperature(), None);
    }

    proptest! {
        #[test]
        fn no_slot_survives(q in "[A-Za-z0-9 ?,.'\"()-]{1,40}", ee in prop::collection::vec("[a-z ]{1,12}", 0..3)) {
            let slot = regex::Regex::new(r"\{[a-z_]+\}").unwrap();
            let b = builder();
            let prompts = [
                b.cypher_prompt(SCHEMA, &q, &ee, ""),
                b.verbalization_prompt(&q, &ResultTable::default()),
                b.subgraph_prompt(&format!("MATCH (n) WHERE n.name = '{q}' RETURN n")),
                b.judge_prompt(&q, &ResultTable::default(), &q, "x"),
                b.direct_prompt(&q),
            ];
            for p in prompts {
                prop_assert!(!slot.is_match(&p.system));
                prop_assert!(!slot.is_match(&p.user));
            }
        }

        #[test]
        fn marker_detection_total(s in "\\PC{0,60}") {
            let _ = detect_schema_error(&s);
            let _ = strip_code_fences(&s);
        }
    }
}
