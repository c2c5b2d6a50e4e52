//! Structural rewrites over [`Query`].

use std::collections::{BTreeSet, HashMap};

use super::ast::*;

/// Rewrites a query so it returns every node and relationship it matches.
///
/// Anonymous relationships in MATCH get fresh variables `r1`, `r2`, ... in
/// first-appearance order, skipping names already in use. RETURN becomes the
/// bound node variables followed by the relationship variables; ORDER BY and
/// LIMIT are dropped. A query that already returns exactly its bound
/// variables is returned unchanged.
pub fn rewrite_return_all_bound(query: &Query) -> Query {
    let bound = query.bound_variables();
    let has_anonymous_rel = query
        .matches
        .iter()
        .flat_map(|m| &m.patterns)
        .flat_map(|c| &c.rels)
        .any(|r| r.variable.is_none());
    if !has_anonymous_rel
        && returns_exactly(query, &bound)
        && query.order_by.is_empty()
        && query.limit.is_none()
    {
        return query.clone();
    }

    let mut taken: BTreeSet<String> = BTreeSet::new();
    collect_all_names(query, &mut taken);
    let mut out = query.clone();
    let mut counter = 0;
    for m in &mut out.matches {
        for chain in &mut m.patterns {
            for rel in &mut chain.rels {
                if rel.variable.is_none() {
                    let name = loop {
                        counter += 1;
                        let candidate = format!("r{counter}");
                        if !taken.contains(&candidate) {
                            break candidate;
                        }
                    };
                    taken.insert(name.clone());
                    rel.variable = Some(name);
                }
            }
        }
    }
    let bound = out.bound_variables();
    let nodes = bound.iter().filter(|(_, k)| *k == VarKind::Node);
    let rels = bound.iter().filter(|(_, k)| *k == VarKind::Relationship);
    out.ret = ReturnClause {
        distinct: query.ret.distinct,
        items: nodes
            .chain(rels)
            .map(|(v, _)| ReturnItem {
                expr: Expr::Variable(v.clone()),
                alias: None,
            })
            .collect(),
    };
    out.order_by.clear();
    out.limit = None;
    out
}

fn returns_exactly(query: &Query, bound: &[(String, VarKind)]) -> bool {
    let mut returned = BTreeSet::new();
    for item in &query.ret.items {
        match (&item.expr, &item.alias) {
            (Expr::Variable(v), None) => {
                returned.insert(v.clone());
            }
            _ => return false,
        }
    }
    returned.len() == bound.len() && bound.iter().all(|(v, _)| returned.contains(v))
}

fn collect_all_names(query: &Query, out: &mut BTreeSet<String>) {
    let mut q = query.clone();
    q.for_each_chain_mut(&mut |c| {
        for n in &c.nodes {
            if let Some(v) = &n.variable {
                out.insert(v.clone());
            }
        }
        for r in &c.rels {
            if let Some(v) = &r.variable {
                out.insert(v.clone());
            }
        }
    });
    for item in &query.ret.items {
        if let Some(a) = &item.alias {
            out.insert(a.clone());
        }
    }
}

/// Canonical form of a query's MATCH/WHERE part with every variable,
/// named or anonymous, renamed `v1, v2, ...` in first-appearance order.
///
/// Two queries with equal signatures match the same bindings, so an
/// externally produced rewrite can be checked against the original.
pub fn topology_signature(query: &Query) -> Vec<MatchClause> {
    let mut names: HashMap<String, String> = HashMap::new();
    let mut next = 0usize;
    let mut fresh = |names: &mut HashMap<String, String>, v: &Option<String>| -> Option<String> {
        match v {
            Some(v) => Some(
                names
                    .entry(v.clone())
                    .or_insert_with(|| {
                        next += 1;
                        format!("v{next}")
                    })
                    .clone(),
            ),
            None => {
                next += 1;
                Some(format!("v{next}"))
            }
        }
    };
    let mut clauses = query.matches.clone();
    for m in &mut clauses {
        for chain in &mut m.patterns {
            for i in 0..chain.nodes.len() {
                chain.nodes[i].variable = fresh(&mut names, &chain.nodes[i].variable);
                if i < chain.rels.len() {
                    chain.rels[i].variable = fresh(&mut names, &chain.rels[i].variable);
                }
            }
        }
        if let Some(w) = &mut m.where_clause {
            rename_expr(w, &names);
        }
    }
    clauses
}

fn rename_expr(e: &mut Expr, names: &HashMap<String, String>) {
    match e {
        Expr::Variable(v) | Expr::Property { variable: v, .. } => {
            if let Some(n) = names.get(v) {
                *v = n.clone();
            }
        }
        Expr::Exists(sp) | Expr::CountPattern(sp) => {
            for c in &mut sp.patterns {
                for n in &mut c.nodes {
                    if let Some(v) = &mut n.variable {
                        if let Some(r) = names.get(v) {
                            *v = r.clone();
                        }
                    }
                }
            }
            if let Some(w) = &mut sp.where_clause {
                rename_expr(w, names);
            }
        }
        other => other.for_each_child_mut(&mut |c| rename_expr(c, names)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{format, parse};
    use super::*;

    const PINK1: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[:associated_with]->(d:disease) RETURN d.id AS ID, d.name AS Name"#;
    const PINK1_SUBGRAPH: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[a:associated_with]->(d:disease) RETURN g, d, a"#;

    #[test]
    fn pink1_rewrite_matches_reference_modulo_naming() {
        let rewritten = rewrite_return_all_bound(&parse(PINK1).unwrap());
        assert_eq!(
            format(&rewritten),
            "MATCH (g:gene_or_protein {name: \"pink1\"})-[r1:associated_with]->(d:disease)\nRETURN g, d, r1"
        );
        let reference = parse(PINK1_SUBGRAPH).unwrap();
        assert_eq!(
            topology_signature(&rewritten),
            topology_signature(&reference)
        );
        assert_eq!(rewritten.ret.items.len(), reference.ret.items.len());
    }

    #[test]
    fn fixpoint_when_already_returning_all() {
        let q = parse(PINK1_SUBGRAPH).unwrap();
        assert_eq!(rewrite_return_all_bound(&q), q);
        let again = rewrite_return_all_bound(&rewrite_return_all_bound(&parse(PINK1).unwrap()));
        assert_eq!(again, rewrite_return_all_bound(&parse(PINK1).unwrap()));
    }

    #[test]
    fn two_hop_chain() {
        let q = parse("MATCH (a:drug)-[:target]->(g:gene_or_protein)-[:associated_with]->(d:disease) RETURN COUNT(d)").unwrap();
        let r = rewrite_return_all_bound(&q);
        let names: Vec<String> = r
            .ret
            .items
            .iter()
            .map(|i| format::format_expr(&i.expr))
            .collect();
        assert_eq!(names, vec!["a", "g", "d", "r1", "r2"]);
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let q = parse("MATCH (r1)-[]->(r2) RETURN r1").unwrap();
        let r = rewrite_return_all_bound(&q);
        assert_eq!(
            r.matches[0].patterns[0].rels[0].variable.as_deref(),
            Some("r3")
        );
    }

    #[test]
    fn signature_ignores_variable_names_only() {
        let a = parse("MATCH (x:drug)-[:t]->(y) WHERE x.name = 'a' RETURN y").unwrap();
        let b = parse("MATCH (p:drug)-[q:t]->(z) WHERE p.name = 'a' RETURN p, z, q").unwrap();
        let c = parse("MATCH (p:drug)-[q:t]->(z) WHERE z.name = 'a' RETURN p").unwrap();
        assert_eq!(topology_signature(&a), topology_signature(&b));
        assert_ne!(topology_signature(&a), topology_signature(&c));
    }
}
