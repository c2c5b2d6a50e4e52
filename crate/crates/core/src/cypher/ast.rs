//! Syntax tree for the supported Cypher subset.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub matches: Vec<MatchClause>,
    pub ret: ReturnClause,
    pub order_by: Vec<SortItem>,
    pub limit: Option<u64>,
}

/// `MATCH p1, p2, ... [WHERE expr]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchClause {
    pub patterns: Vec<PatternChain>,
    pub where_clause: Option<Expr>,
}

/// `(a)-[r]->(b)<-[s]-(c)...`: `nodes.len() == rels.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternChain {
    pub nodes: Vec<NodePattern>,
    pub rels: Vec<RelPattern>,
}

impl PatternChain {
    pub fn single(node: NodePattern) -> Self {
        Self {
            nodes: vec![node],
            rels: Vec::new(),
        }
    }
}

pub type PropertyMap = BTreeMap<String, Literal>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub variable: Option<String>,
    pub label: Option<String>,
    pub properties: PropertyMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `-[]->`
    Outgoing,
    /// `<-[]-`
    Incoming,
    /// `-[]-`
    Either,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPattern {
    pub variable: Option<String>,
    pub rel_type: Option<String>,
    pub properties: PropertyMap,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Integer(i64),
    Float(f64),
    String(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Eq => "=",
            Self::Ne => "<>",
            Self::Lt => "<",
            Self::Gt => ">",
            Self::Le => "<=",
            Self::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StringOp {
    Contains,
    StartsWith,
    EndsWith,
}

/// Scalar functions. Aggregates are separate (`Expr::Count`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    ToLower,
    ToUpper,
    Size,
}

impl Function {
    pub fn name(self) -> &'static str {
        match self {
            Self::ToLower => "toLower",
            Self::ToUpper => "toUpper",
            Self::Size => "size",
        }
    }

    pub fn lookup(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tolower" => Some(Self::ToLower),
            "toupper" => Some(Self::ToUpper),
            "size" => Some(Self::Size),
            _ => None,
        }
    }
}

/// Argument of `count(...)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CountArg {
    Star,
    Expr { distinct: bool, expr: Box<Expr> },
}

/// Pattern used inside an expression: `EXISTS { ... }`, `COUNT { ... }`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubPattern {
    pub patterns: Vec<PatternChain>,
    pub where_clause: Option<Box<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    Variable(String),
    Property {
        variable: String,
        key: String,
    },
    List(Vec<Expr>),
    /// Flattened n-ary conjunction, never nested directly in another `And`.
    And(Vec<Expr>),
    /// Flattened n-ary disjunction, never nested directly in another `Or`.
    Or(Vec<Expr>),
    Not(Box<Expr>),
    Compare {
        op: CompareOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    StringMatch {
        op: StringOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    In {
        item: Box<Expr>,
        list: Box<Expr>,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    Function {
        function: Function,
        arg: Box<Expr>,
    },
    /// Aggregate `count(...)`; only allowed as a whole RETURN item.
    Count(CountArg),
    Exists(SubPattern),
    /// `COUNT { pattern }` subquery, a per-row scalar.
    CountPattern(SubPattern),
}

impl Expr {
    pub fn string(s: impl Into<String>) -> Self {
        Self::Literal(Literal::String(s.into()))
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Self::Count(_))
    }

    /// Builds a conjunction, flattening nested conjunctions.
    pub fn and(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        for e in items {
            match e {
                Expr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::And(flat)
        }
    }

    /// Builds a disjunction, flattening nested disjunctions.
    pub fn or(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        for e in items {
            match e {
                Expr::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::Or(flat)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnClause {
    pub distinct: bool,
    pub items: Vec<ReturnItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortItem {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Node,
    Relationship,
}

impl Query {
    /// Variables bound by the MATCH clauses, in first-appearance order.
    /// Variables local to EXISTS/COUNT subpatterns are not included.
    pub fn bound_variables(&self) -> Vec<(String, VarKind)> {
        let mut out: Vec<(String, VarKind)> = Vec::new();
        for m in &self.matches {
            for chain in &m.patterns {
                collect_chain_vars(chain, &mut out);
            }
        }
        out
    }

    /// Walks every pattern chain, including those nested in expressions.
    pub fn for_each_chain_mut(&mut self, f: &mut dyn FnMut(&mut PatternChain)) {
        for m in &mut self.matches {
            for chain in &mut m.patterns {
                f(chain);
            }
            if let Some(w) = &mut m.where_clause {
                w.for_each_chain_mut(f);
            }
        }
        for item in &mut self.ret.items {
            item.expr.for_each_chain_mut(f);
        }
        for s in &mut self.order_by {
            s.expr.for_each_chain_mut(f);
        }
    }

    /// Walks every expression tree root (WHERE, RETURN, ORDER BY).
    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        for m in &mut self.matches {
            if let Some(w) = &mut m.where_clause {
                f(w);
            }
        }
        for item in &mut self.ret.items {
            f(&mut item.expr);
        }
        for s in &mut self.order_by {
            f(&mut s.expr);
        }
    }

    /// Output column names: the alias, or the rendered expression.
    pub fn column_names(&self) -> Vec<String> {
        self.ret
            .items
            .iter()
            .map(|i| {
                i.alias
                    .clone()
                    .unwrap_or_else(|| super::format::format_expr(&i.expr))
            })
            .collect()
    }
}

pub(crate) fn collect_chain_vars(chain: &PatternChain, out: &mut Vec<(String, VarKind)>) {
    let mut push = |v: &Option<String>, kind| {
        if let Some(v) = v {
            if !out.iter().any(|(n, _)| n == v) {
                out.push((v.clone(), kind));
            }
        }
    };
    for (i, n) in chain.nodes.iter().enumerate() {
        push(&n.variable, VarKind::Node);
        if let Some(r) = chain.rels.get(i) {
            push(&r.variable, VarKind::Relationship);
        }
    }
}

impl Expr {
    pub fn for_each_chain_mut(&mut self, f: &mut dyn FnMut(&mut PatternChain)) {
        match self {
            Expr::Exists(sp) | Expr::CountPattern(sp) => {
                for c in &mut sp.patterns {
                    f(c);
                }
                if let Some(w) = &mut sp.where_clause {
                    w.for_each_chain_mut(f);
                }
            }
            _ => self.for_each_child_mut(&mut |e| e.for_each_chain_mut(f)),
        }
    }

    /// Applies `f` to each direct sub-expression (not into subpatterns).
    pub fn for_each_child_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Expr::Literal(_) | Expr::Variable(_) | Expr::Property { .. } => {}
            Expr::Exists(_) | Expr::CountPattern(_) => {}
            Expr::List(items) | Expr::And(items) | Expr::Or(items) => {
                items.iter_mut().for_each(&mut *f)
            }
            Expr::Not(e) => f(e),
            Expr::Compare { left, right, .. } | Expr::StringMatch { left, right, .. } => {
                f(left);
                f(right);
            }
            Expr::In { item, list } => {
                f(item);
                f(list);
            }
            Expr::IsNull { expr, .. } => f(expr),
            Expr::Function { arg, .. } => f(arg),
            Expr::Count(CountArg::Star) => {}
            Expr::Count(CountArg::Expr { expr, .. }) => f(expr),
        }
    }

    pub fn for_each_child(&self, f: &mut dyn FnMut(&Expr)) {
        match self {
            Expr::Literal(_) | Expr::Variable(_) | Expr::Property { .. } => {}
            Expr::Exists(_) | Expr::CountPattern(_) => {}
            Expr::List(items) | Expr::And(items) | Expr::Or(items) => {
                items.iter().for_each(&mut *f)
            }
            Expr::Not(e) => f(e),
            Expr::Compare { left, right, .. } | Expr::StringMatch { left, right, .. } => {
                f(left);
                f(right);
            }
            Expr::In { item, list } => {
                f(item);
                f(list);
            }
            Expr::IsNull { expr, .. } => f(expr),
            Expr::Function { arg, .. } => f(arg),
            Expr::Count(CountArg::Star) => {}
            Expr::Count(CountArg::Expr { expr, .. }) => f(expr),
        }
    }
}
