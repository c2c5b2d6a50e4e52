//! Canonical rendering: one clause per line, uppercase keywords, single
//! spaces between tokens and double-quoted strings.

use std::fmt::Write;

use super::ast::*;
use super::parser::is_reserved;

pub fn format(q: &Query) -> String {
    let mut lines = Vec::new();
    for m in &q.matches {
        lines.push(format!("MATCH {}", format_patterns(&m.patterns)));
        if let Some(w) = &m.where_clause {
            lines.push(format!("WHERE {}", format_expr(w)));
        }
    }
    let mut ret = String::from("RETURN ");
    if q.ret.distinct {
        ret.push_str("DISTINCT ");
    }
    let items: Vec<String> = q
        .ret
        .items
        .iter()
        .map(|i| match &i.alias {
            Some(a) => format!("{} AS {}", format_expr(&i.expr), variable(a)),
            None => format_expr(&i.expr),
        })
        .collect();
    ret.push_str(&items.join(", "));
    lines.push(ret);
    if !q.order_by.is_empty() {
        let keys: Vec<String> = q
            .order_by
            .iter()
            .map(|s| {
                let e = format_expr(&s.expr);
                if s.descending {
                    format!("{e} DESC")
                } else {
                    e
                }
            })
            .collect();
        lines.push(format!("ORDER BY {}", keys.join(", ")));
    }
    if let Some(n) = q.limit {
        lines.push(format!("LIMIT {n}"));
    }
    lines.join("\n")
}

fn is_plain(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn quote_ident(s: &str) -> String {
    format!("`{}`", s.replace('`', "``"))
}

/// Variables and aliases: keywords need quoting.
fn variable(s: &str) -> String {
    if is_plain(s) && !is_reserved(s) {
        s.to_string()
    } else {
        quote_ident(s)
    }
}

/// Labels, relationship types and property keys.
fn symbol(s: &str) -> String {
    if is_plain(s) {
        s.to_string()
    } else {
        quote_ident(s)
    }
}

pub fn format_patterns(chains: &[PatternChain]) -> String {
    chains
        .iter()
        .map(format_chain)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn format_chain(chain: &PatternChain) -> String {
    let mut out = format_node(&chain.nodes[0]);
    for (rel, node) in chain.rels.iter().zip(&chain.nodes[1..]) {
        out.push_str(&format_rel(rel));
        out.push_str(&format_node(node));
    }
    out
}

fn format_props(props: &PropertyMap) -> String {
    let inner: Vec<String> = props
        .iter()
        .map(|(k, v)| format!("{}: {}", symbol(k), format_literal(v)))
        .collect();
    format!("{{{}}}", inner.join(", "))
}

fn format_node(n: &NodePattern) -> String {
    let mut s = String::from("(");
    if let Some(v) = &n.variable {
        s.push_str(&variable(v));
    }
    if let Some(l) = &n.label {
        s.push(':');
        s.push_str(&symbol(l));
    }
    if !n.properties.is_empty() {
        if n.variable.is_some() || n.label.is_some() {
            s.push(' ');
        }
        s.push_str(&format_props(&n.properties));
    }
    s.push(')');
    s
}

fn format_rel(r: &RelPattern) -> String {
    let mut inner = String::new();
    if let Some(v) = &r.variable {
        inner.push_str(&variable(v));
    }
    if let Some(t) = &r.rel_type {
        inner.push(':');
        inner.push_str(&symbol(t));
    }
    if !r.properties.is_empty() {
        if !inner.is_empty() {
            inner.push(' ');
        }
        inner.push_str(&format_props(&r.properties));
    }
    match r.direction {
        Direction::Outgoing => format!("-[{inner}]->"),
        Direction::Incoming => format!("<-[{inner}]-"),
        Direction::Either => format!("-[{inner}]-"),
    }
}

pub fn format_literal(l: &Literal) -> String {
    match l {
        Literal::Null => "NULL".into(),
        Literal::Bool(true) => "TRUE".into(),
        Literal::Bool(false) => "FALSE".into(),
        Literal::Integer(i) => i.to_string(),
        Literal::Float(f) => format!("{f:?}"),
        Literal::String(s) => quote_string(s),
    }
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Binding strength; children weaker than their parent's requirement are
/// parenthesized.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Or(_) => 1,
        Expr::And(_) => 2,
        Expr::Not(_) => 3,
        Expr::Compare { .. } | Expr::StringMatch { .. } | Expr::In { .. } | Expr::IsNull { .. } => {
            4
        }
        _ => 5,
    }
}

pub fn format_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let paren = precedence(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Literal(l) => out.push_str(&format_literal(l)),
        Expr::Variable(v) => out.push_str(&variable(v)),
        Expr::Property { variable: v, key } => {
            let _ = write!(out, "{}.{}", variable(v), symbol(key));
        }
        Expr::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, 0);
            }
            out.push(']');
        }
        Expr::Or(items) => join(out, items, " OR ", 2),
        Expr::And(items) => join(out, items, " AND ", 3),
        Expr::Not(inner) => {
            out.push_str("NOT ");
            write_expr(out, inner, 3);
        }
        Expr::Compare { op, left, right } => {
            write_expr(out, left, 5);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, right, 5);
        }
        Expr::StringMatch { op, left, right } => {
            write_expr(out, left, 5);
            out.push_str(match op {
                StringOp::Contains => " CONTAINS ",
                StringOp::StartsWith => " STARTS WITH ",
                StringOp::EndsWith => " ENDS WITH ",
            });
            write_expr(out, right, 5);
        }
        Expr::In { item, list } => {
            write_expr(out, item, 5);
            out.push_str(" IN ");
            write_expr(out, list, 5);
        }
        Expr::IsNull { expr, negated } => {
            write_expr(out, expr, 5);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::Function { function, arg } => {
            let _ = write!(out, "{}(", function.name());
            write_expr(out, arg, 0);
            out.push(')');
        }
        Expr::Count(CountArg::Star) => out.push_str("COUNT(*)"),
        Expr::Count(CountArg::Expr { distinct, expr }) => {
            out.push_str("COUNT(");
            if *distinct {
                out.push_str("DISTINCT ");
            }
            write_expr(out, expr, 0);
            out.push(')');
        }
        Expr::Exists(sp) => {
            out.push_str("EXISTS ");
            write_subpattern(out, sp);
        }
        Expr::CountPattern(sp) => {
            out.push_str("COUNT ");
            write_subpattern(out, sp);
        }
    }
    if paren {
        out.push(')');
    }
}

fn join(out: &mut String, items: &[Expr], sep: &str, min: u8) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        write_expr(out, item, min);
    }
}

fn write_subpattern(out: &mut String, sp: &SubPattern) {
    match &sp.where_clause {
        None => {
            let _ = write!(out, "{{ {} }}", format_patterns(&sp.patterns));
        }
        Some(w) => {
            let _ = write!(
                out,
                "{{ MATCH {} WHERE {} }}",
                format_patterns(&sp.patterns),
                format_expr(w)
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    const PINK1: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[:associated_with]->(d:disease) RETURN d.id AS ID, d.name AS Name"#;

    #[test]
    fn pink1_is_two_lines() {
        let text = format(&parse(PINK1).unwrap());
        assert_eq!(
            text,
            "MATCH (g:gene_or_protein {name: \"pink1\"})-[:associated_with]->(d:disease)\nRETURN d.id AS ID, d.name AS Name"
        );
    }

    #[test]
    fn keywords_uppercased() {
        let text = format(
            &parse("match (n:drug) where n.name = 'x' return distinct n.name limit 2").unwrap(),
        );
        assert_eq!(
            text,
            "MATCH (n:drug)\nWHERE n.name = \"x\"\nRETURN DISTINCT n.name\nLIMIT 2"
        );
    }

    #[test]
    fn parenthesization_round_trips() {
        let q = "MATCH (n) WHERE (n.a = 1 OR n.b = 2) AND NOT (n.c = 3 OR n.d IS NULL) RETURN n";
        let ast = parse(q).unwrap();
        let text = format(&ast);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "WHERE (n.a = 1 OR n.b = 2) AND NOT (n.c = 3 OR n.d IS NULL)"
        );
        assert_eq!(parse(&text).unwrap(), ast);
    }

    #[test]
    fn quoting() {
        let q = "MATCH (`match`:`odd label` {`a b`: 'say \"hi\"\\n'}) RETURN `match`.x AS `return`";
        let ast = parse(q).unwrap();
        let text = format(&ast);
        assert_eq!(parse(&text).unwrap(), ast);
        assert!(text.contains("`match`"));
    }

    #[test]
    fn subpatterns() {
        let q = "MATCH (x:disease)<-[:indication]-(d:drug) WHERE NOT EXISTS { MATCH (d2:drug)-[:indication]->(x) WHERE EXISTS { (d2)-[:side_effect]->() } } RETURN DISTINCT x.name";
        let ast = parse(q).unwrap();
        let text = format(&ast);
        assert_eq!(parse(&text).unwrap(), ast);
        assert_eq!(format(&parse(&text).unwrap()), text);
    }
}
