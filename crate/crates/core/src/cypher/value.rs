use std::cmp::Ordering;
use std::sync::Arc;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::graph::{GraphEdge, GraphNode};

use super::ast::Literal;

/// A cell of a [`ResultTable`].
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Node(Arc<GraphNode>),
    Edge(Arc<GraphEdge>),
}

impl From<&Literal> for Value {
    fn from(l: &Literal) -> Self {
        match l {
            Literal::Null => Value::Null,
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Integer(i) => Value::Int(*i),
            Literal::Float(f) => Value::Float(*f),
            Literal::String(s) => Value::Str(s.clone()),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|f| f.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Numeric view, parsing strings on demand.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            Value::Str(s) => parse_number(s),
            _ => None,
        }
    }

    /// Three-valued equality: `None` when either side is null.
    pub fn equals(&self, other: &Value) -> Option<bool> {
        use Value::*;
        Some(match (self, other) {
            (Null, _) | (_, Null) => return None,
            (Str(a), Str(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Int(_) | Float(_), Int(_) | Float(_)) => self.as_number() == other.as_number(),
            (Str(s), Int(_) | Float(_)) | (Int(_) | Float(_), Str(s)) => {
                let n = if matches!(self, Str(_)) { other } else { self };
                match parse_number(s) {
                    Some(x) => Some(x) == n.as_number(),
                    None => false,
                }
            }
            (Bool(a), Bool(b)) => a == b,
            (Str(s), Bool(b)) | (Bool(b), Str(s)) => parse_bool(s) == Some(*b),
            (Node(a), Node(b)) => a.id == b.id,
            (Edge(a), Edge(b)) => a == b,
            (List(a), List(b)) => {
                if a.len() != b.len() {
                    return Some(false);
                }
                let mut saw_null = false;
                for (x, y) in a.iter().zip(b) {
                    match x.equals(y) {
                        Some(false) => return Some(false),
                        None => saw_null = true,
                        Some(true) => {}
                    }
                }
                if saw_null {
                    return None;
                }
                true
            }
            _ => false,
        })
    }

    /// Three-valued ordering comparison; only numbers (after parsing) order.
    pub fn compare_numeric(&self, other: &Value) -> Option<Option<Ordering>> {
        if self.is_null() || other.is_null() {
            return None;
        }
        match (self.as_number(), other.as_number()) {
            (Some(a), Some(b)) => Some(a.partial_cmp(&b)),
            _ => Some(None),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Node(_) => 0,
            Value::Edge(_) => 1,
            Value::List(_) => 2,
            Value::Str(_) => 3,
            Value::Bool(_) => 4,
            Value::Int(_) | Value::Float(_) => 5,
            Value::Null => 6,
        }
    }

    /// Total order used for deterministic row order and ORDER BY.
    /// Nulls sort last.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a.cmp(b),
            (Int(_) | Float(_), Int(_) | Float(_)) => {
                let (a, b) = (self.as_number().unwrap(), other.as_number().unwrap());
                a.total_cmp(&b)
            }
            (Str(a), Str(b)) => a.cmp(b),
            (Bool(a), Bool(b)) => a.cmp(b),
            (Node(a), Node(b)) => a.id.cmp(&b.id),
            (Edge(a), Edge(b)) => a.cmp(b),
            (List(a), List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let o = x.total_cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Null, Null) => Ordering::Equal,
            _ => self.rank().cmp(&other.rank()),
        }
    }

    /// Unambiguous identity key: equal keys iff the values are the same for
    /// DISTINCT and grouping purposes.
    pub fn key(&self) -> String {
        match self {
            Value::Null => "null".into(),
            Value::Bool(b) => format!("b:{b}"),
            Value::Int(i) => format!("n:{i}"),
            Value::Float(f) => format!("n:{}", normalize_float(*f)),
            Value::Str(s) => format!("s:{}", serde_json::to_string(s).unwrap()),
            Value::Node(n) => format!("node:{}", serde_json::to_string(&n.id).unwrap()),
            Value::Edge(e) => format!("edge:{}", serde_json::to_string(&**e).unwrap()),
            Value::List(items) => {
                let inner: Vec<String> = items.iter().map(Value::key).collect();
                format!("[{}]", inner.join(","))
            }
        }
    }

    /// Human-oriented rendering used in prompts and tables.
    pub fn render(&self) -> String {
        match self {
            Value::Null => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) => normalize_float(*f),
            Value::Str(s) => s.clone(),
            Value::List(items) => {
                let inner: Vec<String> = items.iter().map(Value::render).collect();
                format!("[{}]", inner.join(", "))
            }
            Value::Node(n) => {
                let props: Vec<String> = n
                    .properties
                    .iter()
                    .map(|(k, v)| format!("{k}: {v}"))
                    .collect();
                format!("(:{} {{{}}})", n.label, props.join(", "))
            }
            Value::Edge(e) => format!("({})-[:{}]->({})", e.source, e.rel_type, e.target),
        }
    }
}

/// Integral floats print as integers so `2` and `2.0` normalize alike.
pub fn normalize_float(f: f64) -> String {
    if f.is_finite() && f.fract() == 0.0 && f.abs() < 1e15 {
        format!("{}", f as i64)
    } else {
        format!("{f}")
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_none(),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Float(f) => s.serialize_f64(*f),
            Value::Str(v) => s.serialize_str(v),
            Value::List(items) => items.serialize(s),
            Value::Node(n) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("node", &**n)?;
                m.end()
            }
            Value::Edge(e) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("edge", &**e)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        Value::from_json(raw).map_err(serde::de::Error::custom)
    }
}

impl Value {
    /// Decodes the wire representation produced by `Serialize`, which is also
    /// the shape external graph adapters return: scalars, lists, and
    /// `{"node": {...}}` / `{"edge": {...}}` maps.
    pub fn from_json(v: serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        Ok(match v {
            J::Null => Value::Null,
            J::Bool(b) => Value::Bool(b),
            J::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64().ok_or("unrepresentable number")?),
            },
            J::String(s) => Value::Str(s),
            J::Array(items) => Value::List(
                items
                    .into_iter()
                    .map(Value::from_json)
                    .collect::<Result<_, _>>()?,
            ),
            J::Object(mut map) => {
                if let Some(n) = map.remove("node") {
                    Value::Node(Arc::new(
                        serde_json::from_value(n).map_err(|e| e.to_string())?,
                    ))
                } else if let Some(e) = map.remove("edge") {
                    Value::Edge(Arc::new(
                        serde_json::from_value(e).map_err(|e| e.to_string())?,
                    ))
                } else {
                    return Err("object values must be `node` or `edge` maps".into());
                }
            }
        })
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

/// Columns plus rows of values; every row has `columns.len()` cells.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Deterministic pipe-separated text table.
    pub fn render_text(&self) -> String {
        let mut out = self.columns.join(" | ");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Value::render).collect();
            out.push_str(&cells.join(" | "));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_semantics() {
        assert_eq!(Value::Null.equals(&Value::Null), None);
        assert_eq!(Value::Null.equals(&Value::Int(1)), None);
        assert_eq!(Value::Null.compare_numeric(&Value::Int(1)), None);
    }

    #[test]
    fn parse_on_demand() {
        assert_eq!(Value::Str("7".into()).equals(&Value::Int(7)), Some(true));
        assert_eq!(Value::Str("7.0".into()).equals(&Value::Int(7)), Some(true));
        assert_eq!(Value::Str("x".into()).equals(&Value::Int(7)), Some(false));
        assert_eq!(
            Value::Str("10".into()).compare_numeric(&Value::Int(9)),
            Some(Some(Ordering::Greater))
        );
        assert_eq!(
            Value::Str("a".into()).compare_numeric(&Value::Str("b".into())),
            Some(None)
        );
        assert_eq!(
            Value::Str("true".into()).equals(&Value::Bool(true)),
            Some(true)
        );
    }

    #[test]
    fn keys_identify_numbers_across_types() {
        assert_eq!(Value::Int(2).key(), Value::Float(2.0).key());
        assert_ne!(Value::Int(2).key(), Value::Str("2".into()).key());
    }

    #[test]
    fn wire_round_trip() {
        let n = Arc::new(GraphNode {
            id: "d1".into(),
            label: "disease".into(),
            properties: [("name".to_string(), "x".to_string())].into(),
        });
        let row = vec![
            Value::Node(n),
            Value::Int(3),
            Value::Str("a".into()),
            Value::Null,
        ];
        let json = serde_json::to_string(&row).unwrap();
        let back: Vec<Value> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, row);
    }
}
