use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cypher::{normalize_float, ResultTable, Value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
}

impl RetrievalMetrics {
    pub const ZERO: Self = Self {
        iou: 0.0,
        precision: 0.0,
        recall: 0.0,
    };
    pub const PERFECT: Self = Self {
        iou: 1.0,
        precision: 1.0,
        recall: 1.0,
    };

    /// Arithmetic mean per field; all zeros for an empty slice.
    pub fn mean(items: &[RetrievalMetrics]) -> Self {
        if items.is_empty() {
            return Self::ZERO;
        }
        let n = items.len() as f64;
        Self {
            iou: items.iter().map(|m| m.iou).sum::<f64>() / n,
            precision: items.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: items.iter().map(|m| m.recall).sum::<f64>() / n,
        }
    }
}

fn canonical_cell(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => normalize_float(*f),
        Value::Str(s) => s.clone(),
        Value::Node(n) => format!("node:{}", n.id),
        Value::Edge(e) => format!("edge:{}|{}|{}", e.source, e.rel_type, e.target),
        Value::List(items) => {
            let inner: Vec<String> = items.iter().map(canonical_cell).collect();
            serde_json::to_string(&inner).unwrap()
        }
    }
}

/// Rows as canonical strings: nodes by id, edges by endpoints and type,
/// scalars by normalized text, cell order kept.
pub fn canonical_rows(table: &ResultTable) -> BTreeSet<String> {
    table
        .rows
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(canonical_cell).collect();
            serde_json::to_string(&cells).unwrap()
        })
        .collect()
}

/// IoU, precision and recall of `generated` against `gold`.
///
/// Both empty scores 1 on every metric. An empty side scores 0 on the
/// metric divided by its size, and so on IoU.
pub fn set_metrics(generated: &BTreeSet<String>, gold: &BTreeSet<String>) -> RetrievalMetrics {
    if generated.is_empty() && gold.is_empty() {
        return RetrievalMetrics::PERFECT;
    }
    let inter = generated.intersection(gold).count() as f64;
    let union = generated.union(gold).count() as f64;
    let ratio = |den: usize| if den == 0 { 0.0 } else { inter / den as f64 };
    RetrievalMetrics {
        iou: inter / union,
        precision: ratio(generated.len()),
        recall: ratio(gold.len()),
    }
}

pub fn row_set_metrics(generated: &ResultTable, gold: &ResultTable) -> RetrievalMetrics {
    set_metrics(&canonical_rows(generated), &canonical_rows(gold))
}
