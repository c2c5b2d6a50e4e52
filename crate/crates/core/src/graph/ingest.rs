use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{GraphEdge, GraphError, GraphNode, PropertyGraph};

const NODE_COLUMNS: [&str; 3] = ["id", "label", "name"];
const EDGE_COLUMNS: [&str; 3] = ["source", "target", "rel_type"];

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub delimiter: u8,
    /// name → preferred name, applied to the `name` column before lowercasing.
    /// Keys are compared case-insensitively.
    pub preferred_terms: HashMap<String, String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            preferred_terms: HashMap::new(),
        }
    }
}

impl IngestOptions {
    pub fn with_preferred_terms<I, K, V>(mut self, terms: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        self.preferred_terms = terms
            .into_iter()
            .map(|(k, v)| (k.as_ref().to_lowercase(), v.into()))
            .collect();
        self
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table<R: Read>(source: R, delimiter: u8, required: &[&str]) -> Result<Table, GraphError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(e) => {
            return Err(GraphError::Malformed {
                row: 1,
                message: e.to_string(),
            })
        }
    };
    // An entirely empty source has no header and no rows.
    if header.iter().all(String::is_empty) {
        return Ok(Table {
            header,
            rows: Vec::new(),
        });
    }
    for col in required {
        if !header.iter().any(|h| h == col) {
            return Err(GraphError::MissingColumn {
                row: 1,
                column: col.to_string(),
            });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| GraphError::Malformed {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

fn split_row(
    header: &[String],
    line: usize,
    row: Vec<String>,
    required: &[&str],
) -> Result<(Vec<String>, BTreeMap<String, String>), GraphError> {
    let mut fields: HashMap<&str, String> = HashMap::new();
    for (i, col) in header.iter().enumerate() {
        if let Some(v) = row.get(i) {
            fields.insert(col.as_str(), v.clone());
        }
    }
    let mut req = Vec::with_capacity(required.len());
    for col in required {
        match fields.remove(col) {
            None => {
                return Err(GraphError::MissingColumn {
                    row: line,
                    column: col.to_string(),
                })
            }
            Some(v) if v.is_empty() => {
                return Err(GraphError::EmptyValue {
                    row: line,
                    column: col.to_string(),
                })
            }
            Some(v) => req.push(v),
        }
    }
    let extra = fields
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok((req, extra))
}

/// Reads node and edge tables into a [`PropertyGraph`].
///
/// Node rows need `id`, `label`, `name`; edge rows need `source`, `target`,
/// `rel_type`. Any other column becomes a property. Row numbers in errors
/// are 1-based file lines (the header is line 1).
pub fn ingest<N: Read, E: Read>(
    nodes_source: N,
    edges_source: E,
    options: &IngestOptions,
) -> Result<PropertyGraph, GraphError> {
    let table = read_table(nodes_source, options.delimiter, &NODE_COLUMNS)?;
    let mut nodes = Vec::with_capacity(table.rows.len());
    for (line, row) in table.rows {
        let (req, mut properties) = split_row(&table.header, line, row, &NODE_COLUMNS)?;
        let [id, label, name]: [String; 3] = req.try_into().expect("three required columns");
        let name = options
            .preferred_terms
            .get(&name.to_lowercase())
            .cloned()
            .unwrap_or(name);
        properties.insert("name".into(), name);
        nodes.push(GraphNode {
            id,
            label,
            properties,
        });
    }

    let table = read_table(edges_source, options.delimiter, &EDGE_COLUMNS)?;
    let mut edges = Vec::with_capacity(table.rows.len());
    for (line, row) in table.rows {
        let (req, properties) = split_row(&table.header, line, row, &EDGE_COLUMNS)?;
        let [source, target, rel_type]: [String; 3] =
            req.try_into().expect("three required columns");
        edges.push(GraphEdge {
            source,
            target,
            rel_type,
            properties,
        });
    }
    PropertyGraph::from_parts(nodes, edges)
}

fn open(path: &Path) -> Result<File, GraphError> {
    File::open(path).map_err(|e| GraphError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// File-based [`ingest`]. A `.tsv` node file switches the delimiter to tab.
pub fn ingest_paths(
    nodes: &Path,
    edges: &Path,
    options: &IngestOptions,
) -> Result<PropertyGraph, GraphError> {
    let mut options = options.clone();
    if nodes.extension().is_some_and(|e| e == "tsv") {
        options.delimiter = b'\t';
    }
    let n = open(nodes)?;
    let e = open(edges)?;
    ingest(n, e, &options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(nodes: &str, edges: &str) -> Result<PropertyGraph, GraphError> {
        ingest(
            nodes.as_bytes(),
            edges.as_bytes(),
            &IngestOptions::default(),
        )
    }

    #[test]
    fn lowercases_names_and_keeps_extra_columns() {
        let g = run(
            "id,label,name,source_db\nDB00818,drug,Phenobarbital,DrugBank\n",
            "source,target,rel_type\n",
        )
        .unwrap();
        let n = g.node_by_id("db00818").unwrap();
        assert_eq!(n.name(), Some("phenobarbital"));
        assert_eq!(n.properties["source_db"], "drugbank");
        assert_eq!(n.properties["id"], "db00818");
    }

    #[test]
    fn empty_sources_give_empty_graph() {
        let g = run("", "").unwrap();
        assert_eq!(g.node_count(), 0);
        let g = run("id,label,name\n", "source,target,rel_type\n").unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn pink1_fixture_from_tables() {
        let g = run(
            "id,label,name\ng1,gene_or_protein,PINK1\nd1,disease,disease_a\nd2,disease,disease_b\n",
            "source,target,rel_type\ng1,d1,associated_with\ng1,d2,associated_with\n",
        )
        .unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        let sizes: Vec<usize> = (0..3)
            .map(|i| g.outgoing(i).len() + g.incoming(i).len())
            .collect();
        let mut sorted = sizes.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 1, 2]);
    }

    #[test]
    fn missing_column_names_row() {
        let err = run("id,label,name\na,drug\n", "source,target,rel_type\n").unwrap_err();
        assert_eq!(
            err,
            GraphError::MissingColumn {
                row: 2,
                column: "name".into()
            }
        );
        let err = run("id,name\n", "").unwrap_err();
        assert!(matches!(err, GraphError::MissingColumn { row: 1, .. }));
    }

    #[test]
    fn dangling_edge_names_edge() {
        let err = run(
            "id,label,name\na,drug,x\n",
            "source,target,rel_type\na,b,indication\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a -[indication]-> b"), "{msg}");
    }

    #[test]
    fn preferred_terms_applied_before_lowercasing() {
        let opts = IngestOptions::default().with_preferred_terms([("Alcohol", "Ethanol")]);
        let g = ingest(
            "id,label,name\nd1,drug,ALCOHOL\n".as_bytes(),
            "source,target,rel_type\n".as_bytes(),
            &opts,
        )
        .unwrap();
        assert_eq!(g.node_by_id("d1").unwrap().name(), Some("ethanol"));
    }

    #[test]
    fn ingestion_is_idempotent() {
        let nodes = "id,label,name\nb,drug,B\na,disease,A\n";
        let edges = "source,target,rel_type\nb,a,indication\n";
        assert_eq!(run(nodes, edges).unwrap(), run(nodes, edges).unwrap());
    }
}
