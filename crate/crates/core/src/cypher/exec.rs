//! Reference executor: backtracking pattern matcher over a [`PropertyGraph`].
//!
//! Relationship uniqueness holds within each MATCH clause (and within each
//! subpattern), not across clauses. Rows come out in [`Value::total_cmp`]
//! order unless ORDER BY says otherwise.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use crate::graph::PropertyGraph;

use super::ast::*;
use super::value::{ResultTable, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Node(usize),
    Rel(usize),
}

/// Variable bindings of one match, innermost last.
#[derive(Debug, Clone, Default)]
struct Env {
    vars: Vec<(String, Bound)>,
}

impl Env {
    fn get(&self, name: &str) -> Option<Bound> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, b)| *b)
    }
}

type Truth = Option<bool>;

pub fn execute(query: &Query, graph: &PropertyGraph) -> ResultTable {
    Executor { graph }.run(query)
}

struct Executor<'g> {
    graph: &'g PropertyGraph,
}

impl<'g> Executor<'g> {
    fn run(&self, q: &Query) -> ResultTable {
        let mut envs = vec![Env::default()];
        for clause in &q.matches {
            let mut next = Vec::new();
            for env in &envs {
                let mut env = env.clone();
                let mut used = Vec::new();
                self.match_chains(&clause.patterns, 0, &mut env, &mut used, &mut |e| {
                    let keep = match &clause.where_clause {
                        None => true,
                        Some(w) => self.truth(w, e) == Some(true),
                    };
                    if keep {
                        next.push(e.clone());
                    }
                    true
                });
            }
            envs = next;
        }
        self.project(q, &envs)
    }

    // Pattern matching. The callback returns false to stop enumeration.

    fn match_chains(
        &self,
        chains: &[PatternChain],
        ci: usize,
        env: &mut Env,
        used: &mut Vec<usize>,
        emit: &mut dyn FnMut(&Env) -> bool,
    ) -> bool {
        let Some(chain) = chains.get(ci) else {
            return emit(env);
        };
        let first = &chain.nodes[0];
        let candidates: Vec<usize> = match first.variable.as_deref().and_then(|v| env.get(v)) {
            Some(Bound::Node(i)) => vec![i],
            Some(Bound::Rel(_)) => Vec::new(),
            None => match &first.label {
                Some(l) => self.graph.nodes_with_label(l).to_vec(),
                None => (0..self.graph.node_count()).collect(),
            },
        };
        for n in candidates {
            if !self.node_matches(first, n) {
                continue;
            }
            let pushed = self.bind_node(first, n, env);
            let cont = self.extend(chains, ci, 0, n, env, used, emit);
            if pushed {
                env.vars.pop();
            }
            if !cont {
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        &self,
        chains: &[PatternChain],
        ci: usize,
        hop: usize,
        current: usize,
        env: &mut Env,
        used: &mut Vec<usize>,
        emit: &mut dyn FnMut(&Env) -> bool,
    ) -> bool {
        let chain = &chains[ci];
        let Some(rel) = chain.rels.get(hop) else {
            return self.match_chains(chains, ci + 1, env, used, emit);
        };
        let next = &chain.nodes[hop + 1];
        let g = self.graph;
        let mut steps: Vec<(usize, usize)> = Vec::new();
        if matches!(rel.direction, Direction::Outgoing | Direction::Either) {
            steps.extend(
                g.outgoing(current)
                    .iter()
                    .map(|&e| (e, g.edge_endpoints(e).1)),
            );
        }
        if matches!(rel.direction, Direction::Incoming | Direction::Either) {
            steps.extend(
                g.incoming(current)
                    .iter()
                    .filter(|&&e| {
                        // a self-loop already came through the outgoing list
                        rel.direction != Direction::Either || g.edge_endpoints(e).0 != current
                    })
                    .map(|&e| (e, g.edge_endpoints(e).0)),
            );
        }
        for (e, other) in steps {
            if used.contains(&e) || !self.rel_matches(rel, e) {
                continue;
            }
            match next.variable.as_deref().and_then(|v| env.get(v)) {
                Some(Bound::Node(b)) if b != other => continue,
                Some(Bound::Rel(_)) => continue,
                _ => {}
            }
            if !self.node_matches(next, other) {
                continue;
            }
            used.push(e);
            let rel_pushed = if let Some(v) = &rel.variable {
                env.vars.push((v.clone(), Bound::Rel(e)));
                true
            } else {
                false
            };
            let node_pushed = self.bind_node(next, other, env);
            let cont = self.extend(chains, ci, hop + 1, other, env, used, emit);
            if node_pushed {
                env.vars.pop();
            }
            if rel_pushed {
                env.vars.pop();
            }
            used.pop();
            if !cont {
                return false;
            }
        }
        true
    }

    /// Pushes a node binding unless the variable is anonymous or already bound.
    fn bind_node(&self, pattern: &NodePattern, n: usize, env: &mut Env) -> bool {
        match &pattern.variable {
            Some(v) if env.get(v).is_none() => {
                env.vars.push((v.clone(), Bound::Node(n)));
                true
            }
            _ => false,
        }
    }

    fn node_matches(&self, p: &NodePattern, n: usize) -> bool {
        let node = self.graph.node(n);
        if p.label.as_ref().is_some_and(|l| *l != node.label) {
            return false;
        }
        props_match(&p.properties, &node.properties)
    }

    fn rel_matches(&self, p: &RelPattern, e: usize) -> bool {
        let edge = self.graph.edge(e);
        if p.rel_type.as_ref().is_some_and(|t| *t != edge.rel_type) {
            return false;
        }
        props_match(&p.properties, &edge.properties)
    }

    // Expression evaluation.

    fn truth(&self, e: &Expr, env: &Env) -> Truth {
        match self.eval(e, env) {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    fn eval(&self, e: &Expr, env: &Env) -> Value {
        match e {
            Expr::Literal(l) => Value::from(l),
            Expr::Variable(v) => match env.get(v) {
                Some(Bound::Node(n)) => Value::Node(self.graph.node(n).clone()),
                Some(Bound::Rel(r)) => Value::Edge(self.graph.edge(r).clone()),
                None => Value::Null,
            },
            Expr::Property { variable, key } => {
                let props = match env.get(variable) {
                    Some(Bound::Node(n)) => &self.graph.node(n).properties,
                    Some(Bound::Rel(r)) => &self.graph.edge(r).properties,
                    None => return Value::Null,
                };
                props
                    .get(key)
                    .map(|s| Value::Str(s.clone()))
                    .unwrap_or(Value::Null)
            }
            Expr::List(items) => Value::List(items.iter().map(|i| self.eval(i, env)).collect()),
            Expr::And(items) => {
                let mut saw_null = false;
                for i in items {
                    match self.truth(i, env) {
                        Some(false) => return Value::Bool(false),
                        None => saw_null = true,
                        Some(true) => {}
                    }
                }
                truth_value(if saw_null { None } else { Some(true) })
            }
            Expr::Or(items) => {
                let mut saw_null = false;
                for i in items {
                    match self.truth(i, env) {
                        Some(true) => return Value::Bool(true),
                        None => saw_null = true,
                        Some(false) => {}
                    }
                }
                truth_value(if saw_null { None } else { Some(false) })
            }
            Expr::Not(inner) => truth_value(self.truth(inner, env).map(|b| !b)),
            Expr::Compare { op, left, right } => {
                let (l, r) = (self.eval(left, env), self.eval(right, env));
                truth_value(compare(*op, &l, &r))
            }
            Expr::StringMatch { op, left, right } => {
                match (self.eval(left, env), self.eval(right, env)) {
                    (Value::Str(a), Value::Str(b)) => Value::Bool(match op {
                        StringOp::Contains => a.contains(&b),
                        StringOp::StartsWith => a.starts_with(&b),
                        StringOp::EndsWith => a.ends_with(&b),
                    }),
                    _ => Value::Null,
                }
            }
            Expr::In { item, list } => {
                let item = self.eval(item, env);
                match self.eval(list, env) {
                    Value::List(values) => {
                        let mut saw_null = false;
                        for v in &values {
                            match item.equals(v) {
                                Some(true) => return Value::Bool(true),
                                None => saw_null = true,
                                Some(false) => {}
                            }
                        }
                        truth_value(if saw_null { None } else { Some(false) })
                    }
                    _ => Value::Null,
                }
            }
            Expr::IsNull { expr, negated } => {
                Value::Bool(self.eval(expr, env).is_null() != *negated)
            }
            Expr::Function { function, arg } => match (function, self.eval(arg, env)) {
                (Function::ToLower, Value::Str(s)) => Value::Str(s.to_lowercase()),
                (Function::ToUpper, Value::Str(s)) => Value::Str(s.to_uppercase()),
                (Function::Size, Value::Str(s)) => Value::Int(s.chars().count() as i64),
                (Function::Size, Value::List(l)) => Value::Int(l.len() as i64),
                _ => Value::Null,
            },
            // Aggregates are resolved in `project`; reaching here means a
            // per-row evaluation of an aggregate item, which the parser forbids.
            Expr::Count(_) => Value::Null,
            Expr::Exists(sp) => Value::Bool(self.count_subpattern(sp, env, true) > 0),
            Expr::CountPattern(sp) => Value::Int(self.count_subpattern(sp, env, false) as i64),
        }
    }

    fn count_subpattern(&self, sp: &SubPattern, env: &Env, stop_at_first: bool) -> usize {
        let mut local = env.clone();
        let mut used = Vec::new();
        let mut count = 0;
        self.match_chains(&sp.patterns, 0, &mut local, &mut used, &mut |e| {
            let ok = match &sp.where_clause {
                None => true,
                Some(w) => self.truth(w, e) == Some(true),
            };
            if ok {
                count += 1;
            }
            !(ok && stop_at_first)
        });
        count
    }

    // Projection, aggregation, ordering.

    fn project(&self, q: &Query, envs: &[Env]) -> ResultTable {
        let columns = q.column_names();
        let items = &q.ret.items;
        let has_agg = items.iter().any(|i| i.expr.is_aggregate());
        let mut rows: Vec<Vec<Value>> = if has_agg {
            self.aggregate(items, envs)
        } else {
            envs.iter()
                .map(|env| items.iter().map(|i| self.eval(&i.expr, env)).collect())
                .collect()
        };
        if q.ret.distinct {
            let mut seen = HashSet::new();
            rows.retain(|r| seen.insert(row_key(r)));
        }
        rows.sort_by(|a, b| cmp_rows(a, b));
        if !q.order_by.is_empty() {
            let keys: Vec<(usize, bool)> = q
                .order_by
                .iter()
                .map(|s| (sort_column(&s.expr, &q.ret), s.descending))
                .collect();
            rows.sort_by(|a, b| {
                for &(col, desc) in &keys {
                    let o = a[col].total_cmp(&b[col]);
                    let o = if desc { o.reverse() } else { o };
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            });
        }
        if let Some(limit) = q.limit {
            rows.truncate(limit as usize);
        }
        ResultTable { columns, rows }
    }

    fn aggregate(&self, items: &[ReturnItem], envs: &[Env]) -> Vec<Vec<Value>> {
        struct Group {
            keys: Vec<Value>,
            counts: Vec<usize>,
            distinct: Vec<HashSet<String>>,
        }
        let n = items.len();
        let mut groups: BTreeMap<String, Group> = BTreeMap::new();
        for env in envs {
            let keys: Vec<Value> = items
                .iter()
                .filter(|i| !i.expr.is_aggregate())
                .map(|i| self.eval(&i.expr, env))
                .collect();
            let group = groups.entry(row_key(&keys)).or_insert_with(|| Group {
                keys,
                counts: vec![0; n],
                distinct: vec![HashSet::new(); n],
            });
            for (idx, item) in items.iter().enumerate() {
                match &item.expr {
                    Expr::Count(CountArg::Star) => group.counts[idx] += 1,
                    Expr::Count(CountArg::Expr { distinct, expr }) => {
                        let v = self.eval(expr, env);
                        if v.is_null() {
                            continue;
                        }
                        if *distinct {
                            group.distinct[idx].insert(v.key());
                        } else {
                            group.counts[idx] += 1;
                        }
                    }
                    _ => {}
                }
            }
        }
        let grouping = items.iter().any(|i| !i.expr.is_aggregate());
        if groups.is_empty() && !grouping {
            return vec![vec![Value::Int(0); n]];
        }
        groups
            .into_values()
            .map(|g| {
                let mut keys = g.keys.into_iter();
                items
                    .iter()
                    .enumerate()
                    .map(|(idx, item)| match &item.expr {
                        Expr::Count(CountArg::Expr { distinct: true, .. }) => {
                            Value::Int(g.distinct[idx].len() as i64)
                        }
                        Expr::Count(_) => Value::Int(g.counts[idx] as i64),
                        _ => keys.next().unwrap(),
                    })
                    .collect()
            })
            .collect()
    }
}

fn truth_value(t: Truth) -> Value {
    match t {
        Some(b) => Value::Bool(b),
        None => Value::Null,
    }
}

fn compare(op: CompareOp, l: &Value, r: &Value) -> Truth {
    match op {
        CompareOp::Eq => l.equals(r),
        CompareOp::Ne => l.equals(r).map(|b| !b),
        _ => {
            let ord = l.compare_numeric(r)?;
            Some(match ord {
                None => false,
                Some(o) => match op {
                    CompareOp::Lt => o == Ordering::Less,
                    CompareOp::Gt => o == Ordering::Greater,
                    CompareOp::Le => o != Ordering::Greater,
                    CompareOp::Ge => o != Ordering::Less,
                    _ => unreachable!(),
                },
            })
        }
    }
}

fn props_match(pattern: &PropertyMap, actual: &std::collections::BTreeMap<String, String>) -> bool {
    pattern.iter().all(|(k, lit)| match actual.get(k) {
        None => false,
        Some(v) => Value::Str(v.clone()).equals(&Value::from(lit)) == Some(true),
    })
}

pub(crate) fn row_key(row: &[Value]) -> String {
    row.iter()
        .map(Value::key)
        .collect::<Vec<_>>()
        .join("\u{1f}")
}

fn cmp_rows(a: &[Value], b: &[Value]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    // equal under total_cmp but distinct keys (e.g. edges with equal
    // endpoints): fall back to the identity keys
    row_key(a).cmp(&row_key(b))
}

fn sort_column(expr: &Expr, ret: &ReturnClause) -> usize {
    ret.items
        .iter()
        .position(|i| &i.expr == expr)
        .or_else(|| {
            ret.items
                .iter()
                .position(|i| matches!((expr, &i.alias), (Expr::Variable(v), Some(a)) if v == a))
        })
        .expect("parser guarantees ORDER BY keys resolve to a column")
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::graph::tests::{edge, node, pink1_graph};
    use crate::graph::PropertyGraph;

    const PINK1: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[:associated_with]->(d:disease) RETURN d.id AS ID, d.name AS Name"#;

    fn run(q: &str, g: &PropertyGraph) -> ResultTable {
        execute(&parse(q).unwrap(), g)
    }

    fn strings(t: &ResultTable) -> Vec<Vec<String>> {
        t.rows
            .iter()
            .map(|r| r.iter().map(Value::render).collect())
            .collect()
    }

    /// Five drugs, three of which list pterygium as a side effect.
    fn pterygium_graph() -> PropertyGraph {
        let mut nodes: Vec<_> = (1..=5)
            .map(|i| node(&format!("dr{i}"), "drug", &format!("drug{i}")))
            .collect();
        nodes.push(node("e1", "effect", "Pterygium"));
        nodes.push(node("e2", "effect", "nausea"));
        let edges = vec![
            edge("dr1", "e1", "side_effect"),
            edge("dr2", "e1", "side_effect"),
            edge("dr4", "e1", "side_effect"),
            edge("dr3", "e2", "side_effect"),
            edge("dr4", "e2", "side_effect"),
        ];
        PropertyGraph::from_parts(nodes, edges).unwrap()
    }

    #[test]
    fn pink1_two_rows() {
        let t = run(PINK1, &pink1_graph());
        assert_eq!(t.columns, vec!["ID", "Name"]);
        assert_eq!(
            strings(&t),
            vec![vec!["d1", "disease_a"], vec!["d2", "disease_b"]]
        );
    }

    #[test]
    fn count_on_empty_graph_is_zero() {
        let t = run("MATCH (n:drug) RETURN COUNT(n)", &PropertyGraph::default());
        assert_eq!(t.columns, vec!["COUNT(n)"]);
        assert_eq!(strings(&t), vec![vec!["0"]]);
        let t = run(
            "MATCH (n:drug) RETURN n.name, COUNT(n)",
            &PropertyGraph::default(),
        );
        assert!(t.rows.is_empty());
    }

    #[test]
    fn pterygium_side_effect() {
        let t = run(
            r#"MATCH (d:drug)-[:side_effect]->(e:effect {name:"pterygium"}) RETURN d.name"#,
            &pterygium_graph(),
        );
        assert_eq!(
            strings(&t),
            vec![vec!["drug1"], vec!["drug2"], vec!["drug4"]]
        );
    }

    #[test]
    fn grouping_and_distinct_counts() {
        let g = pterygium_graph();
        let t = run(
            "MATCH (d:drug)-[:side_effect]->(e) RETURN e.name AS effect, COUNT(d) AS n ORDER BY n DESC",
            &g,
        );
        assert_eq!(
            strings(&t),
            vec![vec!["pterygium", "3"], vec!["nausea", "2"]]
        );
        let t = run(
            "MATCH (d:drug)-[:side_effect]->(e) RETURN COUNT(DISTINCT d) AS n",
            &g,
        );
        assert_eq!(strings(&t), vec![vec!["4"]]);
        let t = run(
            "MATCH (d:drug)-[:side_effect]->(e) RETURN DISTINCT e.name",
            &g,
        );
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn negated_pattern_predicate() {
        let t = run(
            "MATCH (d:drug) WHERE NOT (d)-[:side_effect]->() RETURN d.name",
            &pterygium_graph(),
        );
        assert_eq!(strings(&t), vec![vec!["drug5"]]);
    }

    #[test]
    fn count_subquery_comparison() {
        let t = run(
            "MATCH (d:drug) WHERE COUNT { (d)-[:side_effect]->() } > 1 RETURN d.name",
            &pterygium_graph(),
        );
        assert_eq!(strings(&t), vec![vec!["drug4"]]);
    }

    #[test]
    fn missing_property_is_null_and_fails_comparisons() {
        let g = pink1_graph();
        let t = run("MATCH (d:disease) RETURN d.nope AS x", &g);
        assert!(t.rows.iter().all(|r| r[0].is_null()));
        assert!(run("MATCH (d:disease) WHERE d.nope = d.nope RETURN d", &g).is_empty());
        assert_eq!(
            run("MATCH (d:disease) WHERE d.nope IS NULL RETURN d", &g).len(),
            2
        );
        assert!(run("MATCH (d:disease) WHERE d.name < 'z' RETURN d", &g).is_empty());
    }

    #[test]
    fn relationship_uniqueness_within_clause() {
        let g = PropertyGraph::from_parts(
            vec![node("a", "x", "a"), node("b", "x", "b")],
            vec![edge("a", "b", "r")],
        )
        .unwrap();
        // a single edge cannot serve both hops of one clause
        assert!(run("MATCH (p)-[:r]-(q)-[:r]-(s) RETURN p", &g).is_empty());
        // across clauses it may be reused
        assert_eq!(
            run("MATCH (p)-[:r]-(q) MATCH (q)-[:r]-(s) RETURN p, s", &g).len(),
            2
        );
    }

    #[test]
    fn undirected_and_incoming() {
        let g = pink1_graph();
        assert_eq!(
            run("MATCH (d:disease)<-[:associated_with]-(g) RETURN d", &g).len(),
            2
        );
        assert_eq!(
            run("MATCH (a)-[:associated_with]-(b) RETURN a, b", &g).len(),
            4
        );
    }

    #[test]
    fn order_and_limit() {
        let t = run(
            "MATCH (d:drug) RETURN d.name AS n ORDER BY n DESC LIMIT 2",
            &pterygium_graph(),
        );
        assert_eq!(strings(&t), vec![vec!["drug5"], vec!["drug4"]]);
    }
}
