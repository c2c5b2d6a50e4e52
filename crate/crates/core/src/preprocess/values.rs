//! AST-level rewrites of literal values and labels.

use std::collections::HashMap;

use crate::cypher::ast::*;
use crate::graph::{GraphSchema, PropertyGraph};

use super::changelog::ChangeLog;
use super::synonyms::SynonymProvider;
use super::StepName;

/// Lowercases string literals in inline property maps and in WHERE
/// comparisons (`=`, `<>`, ordering, `IN`, `CONTAINS`/`STARTS WITH`/`ENDS WITH`).
/// A literal compared against `toUpper(...)` is left alone.
pub fn lowercase_values(query: &Query) -> Query {
    let mut q = query.clone();
    q.for_each_chain_mut(&mut |chain| {
        for props in chain
            .nodes
            .iter_mut()
            .map(|n| &mut n.properties)
            .chain(chain.rels.iter_mut().map(|r| &mut r.properties))
        {
            for lit in props.values_mut() {
                lower_literal(lit);
            }
        }
    });
    q.for_each_expr_mut(&mut lower_comparisons);
    q
}

fn lower_literal(lit: &mut Literal) {
    if let Literal::String(s) = lit {
        *s = s.to_lowercase();
    }
}

fn lower_operand(e: &mut Expr) {
    match e {
        Expr::Literal(l) => lower_literal(l),
        Expr::List(items) => {
            for i in items {
                if let Expr::Literal(l) = i {
                    lower_literal(l);
                }
            }
        }
        _ => {}
    }
}

fn is_upper_call(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Function {
            function: Function::ToUpper,
            ..
        }
    )
}

fn lower_comparisons(e: &mut Expr) {
    match e {
        Expr::Compare { left, right, .. } | Expr::StringMatch { left, right, .. } => {
            if !is_upper_call(left) && !is_upper_call(right) {
                lower_operand(left);
                lower_operand(right);
            }
        }
        Expr::In { item, list } => {
            if !is_upper_call(item) {
                lower_operand(list);
                lower_operand(item);
            }
        }
        Expr::Exists(sp) | Expr::CountPattern(sp) => {
            if let Some(w) = &mut sp.where_clause {
                lower_comparisons(w);
            }
            return;
        }
        _ => {}
    }
    e.for_each_child_mut(&mut lower_comparisons);
}

/// Labels of node variables, taken from every pattern that declares one.
fn variable_labels(query: &Query) -> HashMap<String, String> {
    let mut out = HashMap::new();
    let mut q = query.clone();
    q.for_each_chain_mut(&mut |chain| {
        for n in &chain.nodes {
            if let (Some(v), Some(l)) = (&n.variable, &n.label) {
                out.entry(v.clone()).or_insert_with(|| l.clone());
            }
        }
    });
    out
}

/// Visits every string literal that stands for a `name` property value,
/// with the label of the node it constrains (if known).
fn for_each_name_literal(query: &mut Query, f: &mut dyn FnMut(Option<&str>, &mut String)) {
    let labels = variable_labels(query);
    query.for_each_chain_mut(&mut |chain| {
        for n in &mut chain.nodes {
            let label = n
                .label
                .clone()
                .or_else(|| n.variable.as_ref().and_then(|v| labels.get(v).cloned()));
            if let Some(Literal::String(s)) = n.properties.get_mut("name") {
                f(label.as_deref(), s);
            }
        }
    });
    query.for_each_expr_mut(&mut |e| name_literals_in(e, &labels, f));
}

fn name_property<'a>(e: &'a Expr, labels: &'a HashMap<String, String>) -> Option<Option<&'a str>> {
    match e {
        Expr::Property { variable, key } if key == "name" => {
            Some(labels.get(variable).map(String::as_str))
        }
        Expr::Function {
            function: Function::ToLower,
            arg,
        } => name_property(arg, labels),
        _ => None,
    }
}

fn name_literals_in(
    e: &mut Expr,
    labels: &HashMap<String, String>,
    f: &mut dyn FnMut(Option<&str>, &mut String),
) {
    match e {
        Expr::Compare {
            op: CompareOp::Eq | CompareOp::Ne,
            left,
            right,
        } => {
            if let (Some(label), Expr::Literal(Literal::String(s))) =
                (name_property(left, labels), &mut **right)
            {
                f(label, s);
            } else if let (Expr::Literal(Literal::String(s)), Some(label)) =
                (&mut **left, name_property(right, labels))
            {
                f(label, s);
            }
            return;
        }
        Expr::In { item, list } => {
            if let (Some(label), Expr::List(items)) = (name_property(item, labels), &mut **list) {
                for i in items {
                    if let Expr::Literal(Literal::String(s)) = i {
                        f(label, s);
                    }
                }
            }
            return;
        }
        Expr::Exists(sp) | Expr::CountPattern(sp) => {
            if let Some(w) = &mut sp.where_clause {
                name_literals_in(w, labels, f);
            }
            return;
        }
        _ => {}
    }
    e.for_each_child_mut(&mut |c| name_literals_in(c, labels, f));
}

/// Replaces name literals missing from the graph with the first provider
/// candidate that the graph does contain under the same label.
///
/// Misses and lookup failures are recorded as notes in `log`.
pub fn map_synonyms(
    query: &Query,
    graph: &PropertyGraph,
    provider: &dyn SynonymProvider,
    log: &mut ChangeLog,
) -> Query {
    let mut q = query.clone();
    let mut cache: HashMap<(Option<String>, String), Option<String>> = HashMap::new();
    for_each_name_literal(&mut q, &mut |label, value| {
        if graph.has_name(label, value) {
            return;
        }
        let key = (label.map(str::to_string), value.clone());
        let replacement = cache
            .entry(key)
            .or_insert_with(|| match provider.lookup(value, label) {
                Ok(cands) => {
                    let hit = cands.into_iter().find(|c| graph.has_name(label, c));
                    if hit.is_none() {
                        log.note(
                            StepName::Synonyms,
                            format!("no mapping found for \"{value}\""),
                        );
                    }
                    hit
                }
                Err(e) => {
                    log.note(
                        StepName::Synonyms,
                        format!("no mapping found for \"{value}\": {e}"),
                    );
                    None
                }
            })
            .clone();
        if let Some(r) = replacement {
            *value = r;
        }
    });
    q
}

/// Replaces mapped child names and labels by their parents, one step only.
pub fn child_to_parent(query: &Query, schema: &GraphSchema) -> Query {
    let map = &schema.parent_child;
    let mut q = query.clone();
    if map.is_empty() {
        return q;
    }
    for_each_name_literal(&mut q, &mut |_, value| {
        if let Some(parent) = map.names.get(value.as_str()) {
            *value = parent.clone();
        }
    });
    q.for_each_chain_mut(&mut |chain| {
        for n in &mut chain.nodes {
            if let Some(parent) = n.label.as_ref().and_then(|l| map.labels.get(l)) {
                n.label = Some(parent.clone());
            }
        }
    });
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::{format, parse};
    use crate::graph::tests::{edge, node};
    use crate::graph::{extract_schema, KvMap, ParentChildKind, ParentChildMap};
    use crate::preprocess::synonyms::LocalSynonyms;

    fn fmt(q: &Query) -> String {
        format(q)
    }

    #[test]
    fn lowercases_maps_and_comparisons_only() {
        let q = parse(
            "MATCH (d:Disease {name: \"Pink1\"}) WHERE d.name = \"Epilepsy\" OR d.x IN [\"A\", 'B'] \
             RETURN d.name AS Name, \"KEEP\" AS k",
        )
        .unwrap();
        let out = fmt(&lowercase_values(&q));
        assert!(out.contains("(d:Disease {name: \"pink1\"})"));
        assert!(out.contains("d.name = \"epilepsy\""));
        assert!(out.contains("[\"a\", \"b\"]"));
        assert!(out.contains("\"KEEP\" AS k"));
        assert!(out.contains("AS Name"));
    }

    #[test]
    fn mixed_case_literal() {
        let q = parse("MATCH (d) WHERE d.name = \"EPILEPSY Type-II\" RETURN d").unwrap();
        assert!(fmt(&lowercase_values(&q)).contains("\"epilepsy type-ii\""));
        let plain = parse("MATCH (d) WHERE d.n > 3 RETURN d").unwrap();
        assert_eq!(lowercase_values(&plain), plain);
    }

    #[test]
    fn upper_comparisons_untouched() {
        let q = parse("MATCH (d) WHERE toUpper(d.name) = \"PINK1\" RETURN d").unwrap();
        assert_eq!(lowercase_values(&q), q);
    }

    fn drug_graph() -> PropertyGraph {
        PropertyGraph::from_parts(
            vec![
                node("dr1", "drug", "ethanol"),
                node("dr2", "drug", "warfarin"),
                node("e1", "effect", "alcohol"),
            ],
            vec![edge("dr1", "dr2", "interacts_with")],
        )
        .unwrap()
    }

    #[test]
    fn synonyms_replace_absent_values_with_graph_terms() {
        let g = drug_graph();
        let syn = LocalSynonyms::parse("alcohol\tethyl alcohol\nalcohol\tethanol").unwrap();
        let mut log = ChangeLog::default();
        let q = parse("MATCH (d:drug {name: \"alcohol\"})-[:interacts_with]-(x) RETURN x.name")
            .unwrap();
        let out = map_synonyms(&q, &g, &syn, &mut log);
        assert!(fmt(&out).contains("{name: \"ethanol\"}"));
        assert!(log.notes.is_empty());

        // present under another label only: the label decides
        let q = parse("MATCH (e:effect) WHERE e.name = \"alcohol\" RETURN e").unwrap();
        assert_eq!(map_synonyms(&q, &g, &syn, &mut log), q);
    }

    #[test]
    fn synonym_miss_is_noted() {
        let g = drug_graph();
        let syn = LocalSynonyms::parse("aspirin\tacetylsalicylic acid").unwrap();
        let mut log = ChangeLog::default();
        let q =
            parse("MATCH (d:drug) WHERE d.name IN [\"aspirin\", \"warfarin\"] RETURN d").unwrap();
        assert_eq!(map_synonyms(&q, &g, &syn, &mut log), q);
        assert_eq!(log.notes.len(), 1);
        assert!(log.notes[0].message.contains("no mapping found"));
        assert!(log.entries.is_empty());
    }

    fn schema_with(map: ParentChildMap) -> GraphSchema {
        extract_schema(&drug_graph(), &KvMap::default(), &map)
    }

    #[test]
    fn child_to_parent_single_step() {
        let mut map = ParentChildMap::default();
        map.insert(ParentChildKind::Name, "x_sub", "x");
        map.insert(ParentChildKind::Name, "a", "b");
        map.insert(ParentChildKind::Name, "b", "c");
        map.insert(ParentChildKind::Label, "drug_class", "drug");
        let s = schema_with(map);
        let q =
            parse("MATCH (n:drug_class {name: \"x_sub\"}) WHERE n.name <> \"a\" RETURN n").unwrap();
        let out = fmt(&child_to_parent(&q, &s));
        assert!(out.contains("(n:drug {name: \"x\"})"));
        assert!(out.contains("n.name <> \"b\""));

        let empty = schema_with(ParentChildMap::default());
        assert_eq!(child_to_parent(&q, &empty), q);
    }
}
