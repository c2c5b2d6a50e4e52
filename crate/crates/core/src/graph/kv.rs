//! Line-oriented key/value files: relation descriptions, synonym maps and
//! parent-child maps.
//!
//! One mapping per line, fields separated by a tab. Blank lines and lines
//! starting with `#` are ignored. Keys and values may not contain tabs or
//! newlines; rendering sorts by key, so `render(parse(render(m))) == render(m)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GraphError;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Ordered key → value mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvMap(pub BTreeMap<String, String>);

impl KvMap {
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut map = BTreeMap::new();
        for (row, line) in data_lines(text) {
            let (k, v) = line.split_once('\t').ok_or_else(|| GraphError::Malformed {
                row,
                message: "expected `key<TAB>value`".into(),
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for KvMap {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Self(
            iter.into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentChildKind {
    /// Maps `name` property values.
    Name,
    /// Maps node labels.
    Label,
}

impl fmt::Display for ParentChildKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Name => "name",
            Self::Label => "label",
        })
    }
}

impl FromStr for ParentChildKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "name" => Ok(Self::Name),
            "label" => Ok(Self::Label),
            other => Err(format!("unknown parent-child kind `{other}`")),
        }
    }
}

/// Child → parent replacements, tagged by whether they apply to names or labels.
///
/// Line format is `child<TAB>parent` (a name mapping) or
/// `kind<TAB>child<TAB>parent` with kind `name` or `label`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentChildMap {
    pub names: BTreeMap<String, String>,
    pub labels: BTreeMap<String, String>,
}

impl ParentChildMap {
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut out = Self::default();
        for (row, line) in data_lines(text) {
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (kind, child, parent) = match fields.as_slice() {
                [c, p] => (ParentChildKind::Name, *c, *p),
                [k, c, p] => (
                    k.parse()
                        .map_err(|message| GraphError::Malformed { row, message })?,
                    *c,
                    *p,
                ),
                _ => {
                    return Err(GraphError::Malformed {
                        row,
                        message: "expected `[kind<TAB>]child<TAB>parent`".into(),
                    })
                }
            };
            out.insert(kind, child, parent);
        }
        Ok(out)
    }

    pub fn insert(&mut self, kind: ParentChildKind, child: &str, parent: &str) {
        let target = match kind {
            ParentChildKind::Name => &mut self.names,
            ParentChildKind::Label => &mut self.labels,
        };
        target.insert(child.to_string(), parent.to_string());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (kind, map) in [
            (ParentChildKind::Name, &self.names),
            (ParentChildKind::Label, &self.labels),
        ] {
            for (c, p) in map {
                out.push_str(&format!("{kind}\t{c}\t{p}\n"));
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty() && self.labels.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let m = KvMap::parse("# relation notes\n\nppi\tTemporary, non-covalent binding\n").unwrap();
        assert_eq!(m.get("ppi"), Some("Temporary, non-covalent binding"));
        assert!(KvMap::parse("no tab here").is_err());
    }

    #[test]
    fn parent_child_kinds() {
        let m = ParentChildMap::parse("x_sub\tx\nlabel\tgene\tgene_or_protein\n").unwrap();
        assert_eq!(m.names["x_sub"], "x");
        assert_eq!(m.labels["gene"], "gene_or_protein");
        assert!(ParentChildMap::parse("edge\ta\tb").is_err());
    }

    fn field() -> impl Strategy<Value = String> {
        "[a-z0-9 ,.:()-]{0,12}[a-z0-9]"
            .prop_map(|s| s.trim().to_string())
            .prop_filter("non-empty, no comment marker", |s| !s.is_empty())
    }

    proptest! {
        #[test]
        fn kv_render_round_trips(entries in proptest::collection::btree_map(field(), field(), 0..8)) {
            let m = KvMap(entries);
            let text = m.render();
            let back = KvMap::parse(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(back.render(), text);
        }

        #[test]
        fn parent_child_render_round_trips(
            names in proptest::collection::btree_map(field(), field(), 0..5),
            labels in proptest::collection::btree_map(field(), field(), 0..5),
        ) {
            let m = ParentChildMap { names, labels };
            let back = ParentChildMap::parse(&m.render()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
