use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{KvMap, ParentChildMap, PropertyGraph};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelTypeSchema {
    pub source_labels: BTreeSet<String>,
    pub target_labels: BTreeSet<String>,
    /// Observed `(source label, target label)` combinations.
    pub patterns: BTreeSet<(String, String)>,
    pub properties: BTreeSet<String>,
}

/// Machine-readable description of what a graph contains, used to ground
/// query generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSchema {
    pub node_types: BTreeMap<String, BTreeSet<String>>,
    pub rel_types: BTreeMap<String, RelTypeSchema>,
    pub rel_descriptions: KvMap,
    pub parent_child: ParentChildMap,
}

pub fn extract_schema(
    graph: &PropertyGraph,
    descriptions: &KvMap,
    parent_child: &ParentChildMap,
) -> GraphSchema {
    let mut node_types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for n in graph.nodes() {
        node_types
            .entry(n.label.clone())
            .or_default()
            .extend(n.properties.keys().cloned());
    }
    let mut rel_types: BTreeMap<String, RelTypeSchema> = BTreeMap::new();
    for (i, e) in graph.edges().iter().enumerate() {
        let (s, t) = graph.edge_endpoints(i);
        let (sl, tl) = (graph.node(s).label.clone(), graph.node(t).label.clone());
        let entry = rel_types.entry(e.rel_type.clone()).or_default();
        entry.source_labels.insert(sl.clone());
        entry.target_labels.insert(tl.clone());
        entry.patterns.insert((sl, tl));
        entry.properties.extend(e.properties.keys().cloned());
    }
    GraphSchema {
        node_types,
        rel_types,
        rel_descriptions: descriptions.clone(),
        parent_child: parent_child.clone(),
    }
}

pub const SCHEMA_HEADER: &str = "Graph schema";

/// Stable plain-text rendering for prompt embedding.
///
/// ```text
/// Graph schema
/// Node types:
/// (:disease) {id, name}
/// Relationship types:
/// (:gene_or_protein)-[:associated_with]->(:disease)
/// Relationship descriptions:
/// ppi: Temporary, non-covalent binding ...
/// ```
pub fn render_schema_text(schema: &GraphSchema) -> String {
    let mut out = render_structure_text(schema);
    let desc = render_descriptions_text(schema);
    if !desc.is_empty() {
        out.push_str("Relationship descriptions:\n");
        out.push_str(&desc);
    }
    out
}

/// Header, node types and relationship types only.
pub fn render_structure_text(schema: &GraphSchema) -> String {
    let mut out = String::new();
    out.push_str(SCHEMA_HEADER);
    out.push('\n');
    out.push_str("Node types:\n");
    for (label, props) in &schema.node_types {
        let props: Vec<&str> = props.iter().map(String::as_str).collect();
        out.push_str(&format!("(:{label}) {{{}}}\n", props.join(", ")));
    }
    out.push_str("Relationship types:\n");
    for (rel, rs) in &schema.rel_types {
        for (s, t) in &rs.patterns {
            out.push_str(&format!("(:{s})-[:{rel}]->(:{t})"));
            if !rs.properties.is_empty() {
                let props: Vec<&str> = rs.properties.iter().map(String::as_str).collect();
                out.push_str(&format!(" {{{}}}", props.join(", ")));
            }
            out.push('\n');
        }
    }
    out
}

/// `rel: description` lines for relationship types present in the graph.
pub fn render_descriptions_text(schema: &GraphSchema) -> String {
    schema
        .rel_descriptions
        .0
        .iter()
        .filter(|(k, _)| schema.rel_types.contains_key(*k))
        .map(|(rel, desc)| format!("{rel}: {desc}\n"))
        .collect()
}
