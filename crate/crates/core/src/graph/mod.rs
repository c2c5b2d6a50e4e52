//! Immutable in-memory property graph.
//!
//! Nodes carry a single label and string-valued properties; edges are typed
//! and directed. All property values are lowercased on construction so that
//! query literals can be matched after the same normalization.

mod ingest;
pub mod kv;
mod schema;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest, ingest_paths, IngestOptions};
pub use kv::{KvMap, ParentChildKind, ParentChildMap};
pub use schema::{
    extract_schema, render_descriptions_text, render_schema_text, render_structure_text,
    GraphSchema, RelTypeSchema, SCHEMA_HEADER,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub label: String,
    pub properties: BTreeMap<String, String>,
}

impl GraphNode {
    pub fn name(&self) -> Option<&str> {
        self.properties.get("name").map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub rel_type: String,
    pub properties: BTreeMap<String, String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("row {row}: missing required column `{column}`")]
    MissingColumn { row: usize, column: String },
    #[error("row {row}: empty value for required column `{column}`")]
    EmptyValue { row: usize, column: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge {source_id} -[{rel_type}]-> {target_id} references unknown node `{missing}`")]
    DanglingEdge {
        source_id: String,
        rel_type: String,
        target_id: String,
        missing: String,
    },
    #[error("malformed input at row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Immutable labeled property graph with adjacency and label indexes.
///
/// Nodes are kept sorted by id and edges by `(source, rel_type, target)`, so
/// iteration order never depends on input order.
#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    nodes: Vec<Arc<GraphNode>>,
    edges: Vec<Arc<GraphEdge>>,
    by_id: HashMap<String, usize>,
    by_label: BTreeMap<String, Vec<usize>>,
    by_name: HashMap<String, Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    edge_ends: Vec<(usize, usize)>,
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for PropertyGraph {}

fn lowercase_map(props: BTreeMap<String, String>) -> BTreeMap<String, String> {
    props
        .into_iter()
        .map(|(k, v)| (k, v.to_lowercase()))
        .collect()
}

impl PropertyGraph {
    /// Builds a graph from already-parsed nodes and edges.
    ///
    /// Node ids and every property value are lowercased; `id` is mirrored into
    /// the properties so queries can project it. Exact duplicate edges collapse.
    pub fn from_parts(nodes: Vec<GraphNode>, edges: Vec<GraphEdge>) -> Result<Self, GraphError> {
        let mut nodes: Vec<GraphNode> = nodes
            .into_iter()
            .map(|n| {
                let id = n.id.to_lowercase();
                let mut properties = lowercase_map(n.properties);
                properties.insert("id".to_string(), id.clone());
                GraphNode {
                    id,
                    label: n.label,
                    properties,
                }
            })
            .collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GraphError::DuplicateNode(pair[0].id.clone()));
            }
        }
        let by_id: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();

        let mut edges: Vec<GraphEdge> = edges
            .into_iter()
            .map(|e| GraphEdge {
                source: e.source.to_lowercase(),
                target: e.target.to_lowercase(),
                rel_type: e.rel_type,
                properties: lowercase_map(e.properties),
            })
            .collect();
        edges.sort_by(|a, b| {
            (&a.source, &a.rel_type, &a.target, &a.properties).cmp(&(
                &b.source,
                &b.rel_type,
                &b.target,
                &b.properties,
            ))
        });
        edges.dedup();

        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        let mut edge_ends = Vec::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            let missing = |id: &str| GraphError::DanglingEdge {
                source_id: e.source.clone(),
                rel_type: e.rel_type.clone(),
                target_id: e.target.clone(),
                missing: id.to_string(),
            };
            let s = *by_id.get(&e.source).ok_or_else(|| missing(&e.source))?;
            let t = *by_id.get(&e.target).ok_or_else(|| missing(&e.target))?;
            outgoing[s].push(ei);
            incoming[t].push(ei);
            edge_ends.push((s, t));
        }

        let mut by_label: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            by_label.entry(n.label.clone()).or_default().push(i);
            if let Some(name) = n.name() {
                by_name.entry(name.to_string()).or_default().push(i);
            }
        }

        Ok(Self {
            nodes: nodes.into_iter().map(Arc::new).collect(),
            edges: edges.into_iter().map(Arc::new).collect(),
            by_id,
            by_label,
            by_name,
            outgoing,
            incoming,
            edge_ends,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Arc<GraphNode>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Arc<GraphEdge>] {
        &self.edges
    }

    pub fn node(&self, index: usize) -> &Arc<GraphNode> {
        &self.nodes[index]
    }

    pub fn edge(&self, index: usize) -> &Arc<GraphEdge> {
        &self.edges[index]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn node_by_id(&self, id: &str) -> Option<&Arc<GraphNode>> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    /// Indexes of nodes carrying `label`, in id order.
    pub fn nodes_with_label(&self, label: &str) -> &[usize] {
        self.by_label.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.by_label.keys().map(String::as_str)
    }

    /// Outgoing edge indexes of node `index`.
    pub fn outgoing(&self, index: usize) -> &[usize] {
        &self.outgoing[index]
    }

    /// Incoming edge indexes of node `index`.
    pub fn incoming(&self, index: usize) -> &[usize] {
        &self.incoming[index]
    }

    /// `(source index, target index)` of edge `index`.
    pub fn edge_endpoints(&self, index: usize) -> (usize, usize) {
        self.edge_ends[index]
    }

    /// True if some node (optionally restricted to `label`) has this exact name.
    pub fn has_name(&self, label: Option<&str>, name: &str) -> bool {
        match self.by_name.get(name) {
            None => false,
            Some(idx) => match label {
                None => true,
                Some(l) => idx.iter().any(|&i| self.nodes[i].label == l),
            },
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn node(id: &str, label: &str, name: &str) -> GraphNode {
        GraphNode {
            id: id.into(),
            label: label.into(),
            properties: [("name".to_string(), name.to_string())].into(),
        }
    }

    pub(crate) fn edge(s: &str, t: &str, rel: &str) -> GraphEdge {
        GraphEdge {
            source: s.into(),
            target: t.into(),
            rel_type: rel.into(),
            properties: BTreeMap::new(),
        }
    }

    /// pink1 associated with two diseases.
    pub(crate) fn pink1_graph() -> PropertyGraph {
        PropertyGraph::from_parts(
            vec![
                node("g1", "gene_or_protein", "PINK1"),
                node("d1", "disease", "disease_a"),
                node("d2", "disease", "disease_b"),
            ],
            vec![
                edge("g1", "d1", "associated_with"),
                edge("g1", "d2", "associated_with"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn pink1_fixture_adjacency() {
        let g = pink1_graph();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let gi = g.node_index("g1").unwrap();
        assert_eq!(g.outgoing(gi).len(), 2);
        assert_eq!(g.incoming(gi).len(), 0);
        for d in ["d1", "d2"] {
            let di = g.node_index(d).unwrap();
            assert_eq!(g.incoming(di).len() + g.outgoing(di).len(), 1);
        }
        assert_eq!(g.node_by_id("g1").unwrap().name(), Some("pink1"));
    }

    #[test]
    fn rejects_duplicate_ids_and_dangling_edges() {
        let dup = PropertyGraph::from_parts(vec![node("a", "x", "a"), node("A", "x", "b")], vec![]);
        assert_eq!(dup.unwrap_err(), GraphError::DuplicateNode("a".into()));
        let dangling =
            PropertyGraph::from_parts(vec![node("a", "x", "a")], vec![edge("a", "zz", "r")]);
        match dangling.unwrap_err() {
            GraphError::DanglingEdge { missing, .. } => assert_eq!(missing, "zz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn name_lookup_respects_label() {
        let g = pink1_graph();
        assert!(g.has_name(Some("gene_or_protein"), "pink1"));
        assert!(!g.has_name(Some("disease"), "pink1"));
        assert!(g.has_name(None, "disease_b"));
        assert!(!g.has_name(None, "PINK1"));
    }
}
