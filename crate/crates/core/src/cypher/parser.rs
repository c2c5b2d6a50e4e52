//! Recursive-descent parser for the Cypher subset.
//!
//! Variable scoping is checked while parsing: a WHERE clause sees the
//! variables of its own and earlier MATCH clauses, subpatterns may introduce
//! local variables, and RETURN/ORDER BY only see MATCH-bound variables.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

const RESERVED: &[&str] = &[
    "MATCH",
    "WHERE",
    "RETURN",
    "DISTINCT",
    "AS",
    "AND",
    "OR",
    "NOT",
    "XOR",
    "ORDER",
    "BY",
    "ASC",
    "DESC",
    "ASCENDING",
    "DESCENDING",
    "LIMIT",
    "SKIP",
    "IN",
    "CONTAINS",
    "STARTS",
    "ENDS",
    "WITH",
    "IS",
    "NULL",
    "TRUE",
    "FALSE",
    "EXISTS",
    "OPTIONAL",
    "CREATE",
    "MERGE",
    "DELETE",
    "DETACH",
    "SET",
    "REMOVE",
    "UNWIND",
    "CALL",
    "UNION",
    "FOREACH",
    "LOAD",
    "CASE",
    "WHEN",
    "THEN",
    "ELSE",
    "END",
];

const UNSUPPORTED_CLAUSES: &[&str] = &[
    "OPTIONAL", "CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "WITH", "UNWIND", "CALL",
    "UNION", "FOREACH", "LOAD", "SKIP",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|k| k.eq_ignore_ascii_case(word))
}

/// Parses query text. Error positions are character offsets.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    parse_bytes(text).map_err(|mut e| {
        let byte = e.position;
        e.position = text.char_indices().take_while(|&(i, _)| i < byte).count();
        e
    })
}

fn parse_bytes(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scopes: vec![Vec::new()],
    };
    p.query()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Innermost scope last; index 0 holds MATCH-bound variables.
    scopes: Vec<Vec<(String, VarKind)>>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].start
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: Option<&str>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            position: t.start,
            message: message.into(),
            found: Some(t.tok.describe()),
            expected: expected.map(str::to_string),
        }
    }

    fn error_at(&self, position: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            position,
            message: message.into(),
            found: None,
            expected: None,
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}"), Some(kw)))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}"), Some(what)))
        }
    }

    fn unsupported_clause(&self) -> Option<ParseError> {
        if let Tok::Ident(s) = self.peek() {
            let up = s.to_ascii_uppercase();
            if UNSUPPORTED_CLAUSES.contains(&up.as_str()) {
                let name = if up == "OPTIONAL" {
                    "OPTIONAL MATCH".to_string()
                } else {
                    up
                };
                return Some(self.error(format!("unsupported clause {name}"), None));
            }
        }
        None
    }

    /// Identifier usable as a variable or alias.
    fn variable_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Quoted(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected identifier", Some("identifier"))),
        }
    }

    /// Label, relationship type or property key: keywords allowed.
    fn symbolic_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Quoted(s) | Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected name", Some("name"))),
        }
    }

    fn lookup(&self, name: &str) -> Option<VarKind> {
        self.scopes
            .iter()
            .rev()
            .flat_map(|s| s.iter())
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    fn bind(&mut self, name: &str, kind: VarKind, position: usize) -> PResult<()> {
        match self.lookup(name) {
            Some(k) if k != kind => Err(self.error_at(
                position,
                format!("variable `{name}` already bound with a different type"),
            )),
            Some(VarKind::Relationship) => Err(self.error_at(
                position,
                format!("relationship variable `{name}` bound more than once"),
            )),
            Some(VarKind::Node) => Ok(()),
            None => {
                self.scopes
                    .last_mut()
                    .unwrap()
                    .push((name.to_string(), kind));
                Ok(())
            }
        }
    }

    fn query(&mut self) -> PResult<Query> {
        let mut matches = Vec::new();
        loop {
            if let Some(e) = self.unsupported_clause() {
                return Err(e);
            }
            if self.eat_kw("MATCH") {
                matches.push(self.match_clause()?);
            } else {
                break;
            }
        }
        if matches.is_empty() {
            return Err(self.error("query must start with MATCH", Some("MATCH")));
        }
        if !self.is_kw("RETURN") {
            if let Some(e) = self.unsupported_clause() {
                return Err(e);
            }
        }
        self.expect_kw("RETURN")?;
        let ret = self.return_clause()?;
        let mut order_by = Vec::new();
        if self.is_kw("ORDER") {
            self.bump();
            self.expect_kw("BY")?;
            let aliases = ret
                .items
                .iter()
                .filter_map(|i| i.alias.clone().map(|a| (a, VarKind::Node)))
                .collect();
            self.scopes.push(aliases);
            loop {
                let start = self.here();
                let expr = self.expr(false)?;
                if !order_key_resolves(&expr, &ret) {
                    return Err(self.error_at(
                        start,
                        "ORDER BY expression must be a returned column or alias",
                    ));
                }
                let descending = if self.eat_kw("DESC") || self.eat_kw("DESCENDING") {
                    true
                } else {
                    let _ = self.eat_kw("ASC") || self.eat_kw("ASCENDING");
                    false
                };
                order_by.push(SortItem { expr, descending });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.scopes.pop();
        }
        let mut limit = None;
        if let Some(e) = self.unsupported_clause() {
            return Err(e);
        }
        if self.eat_kw("LIMIT") {
            match self.peek().clone() {
                Tok::Int(n) if n >= 0 => {
                    self.bump();
                    limit = Some(n as u64);
                }
                _ => {
                    return Err(self.error("LIMIT expects a non-negative integer", Some("integer")))
                }
            }
        }
        if let Some(e) = self.unsupported_clause() {
            return Err(e);
        }
        if self.peek() != &Tok::Eof {
            return Err(self.error("unexpected trailing input", Some("end of input")));
        }
        Ok(Query {
            matches,
            ret,
            order_by,
            limit,
        })
    }

    fn match_clause(&mut self) -> PResult<MatchClause> {
        let patterns = self.pattern_list()?;
        let where_clause = if self.eat_kw("WHERE") {
            Some(self.expr(false)?)
        } else {
            None
        };
        Ok(MatchClause {
            patterns,
            where_clause,
        })
    }

    fn pattern_list(&mut self) -> PResult<Vec<PatternChain>> {
        let mut out = vec![self.chain()?];
        while self.eat(&Tok::Comma) {
            out.push(self.chain()?);
        }
        Ok(out)
    }

    fn chain(&mut self) -> PResult<PatternChain> {
        if let Tok::Ident(s) = self.peek() {
            if matches!(self.peek_at(1), Tok::Eq) {
                let s = s.clone();
                return Err(self.error(format!("named path `{s} = ...` is not supported"), None));
            }
        }
        let mut chain = PatternChain::single(self.node_pattern()?);
        while matches!(self.peek(), Tok::Minus | Tok::Lt) {
            let rel = self.rel_pattern()?;
            chain.rels.push(rel);
            chain.nodes.push(self.node_pattern()?);
        }
        Ok(chain)
    }

    fn node_pattern(&mut self) -> PResult<NodePattern> {
        self.expect(&Tok::LParen, "`(`")?;
        let mut node = NodePattern::default();
        if matches!(self.peek(), Tok::Ident(_) | Tok::Quoted(_)) {
            let at = self.here();
            let v = self.variable_name()?;
            self.bind(&v, VarKind::Node, at)?;
            node.variable = Some(v);
        }
        if self.eat(&Tok::Colon) {
            node.label = Some(self.symbolic_name()?);
            if matches!(self.peek(), Tok::Colon | Tok::Pipe) {
                return Err(self.error("multiple labels are not supported", None));
            }
        }
        if self.peek() == &Tok::LBrace {
            node.properties = self.property_map()?;
        }
        self.expect(&Tok::RParen, "`)`")?;
        Ok(node)
    }

    fn rel_pattern(&mut self) -> PResult<RelPattern> {
        let left_arrow = self.eat(&Tok::Lt);
        self.expect(&Tok::Minus, "`-`")?;
        let mut rel = RelPattern {
            variable: None,
            rel_type: None,
            properties: PropertyMap::new(),
            direction: Direction::Either,
        };
        if self.eat(&Tok::LBracket) {
            if matches!(self.peek(), Tok::Ident(_) | Tok::Quoted(_)) {
                let at = self.here();
                let v = self.variable_name()?;
                self.bind(&v, VarKind::Relationship, at)?;
                rel.variable = Some(v);
            }
            if self.eat(&Tok::Colon) {
                rel.rel_type = Some(self.symbolic_name()?);
                if self.peek() == &Tok::Pipe {
                    return Err(self.error("relationship type alternation is not supported", None));
                }
            }
            if self.peek() == &Tok::Star {
                return Err(self.error("variable-length paths are not supported", None));
            }
            if self.peek() == &Tok::LBrace {
                rel.properties = self.property_map()?;
            }
            self.expect(&Tok::RBracket, "`]`")?;
        }
        self.expect(&Tok::Minus, "`-`")?;
        let right_arrow = self.eat(&Tok::Gt);
        rel.direction = match (left_arrow, right_arrow) {
            (false, true) => Direction::Outgoing,
            (true, false) => Direction::Incoming,
            (false, false) => Direction::Either,
            (true, true) => {
                return Err(self.error("relationship cannot point both ways", None));
            }
        };
        Ok(rel)
    }

    fn property_map(&mut self) -> PResult<PropertyMap> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut map = PropertyMap::new();
        if self.eat(&Tok::RBrace) {
            return Ok(map);
        }
        loop {
            let at = self.here();
            let key = self.symbolic_name()?;
            self.expect(&Tok::Colon, "`:`")?;
            let value = self.literal()?;
            if map.insert(key.clone(), value).is_some() {
                return Err(self.error_at(at, format!("duplicate property key `{key}`")));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace, "`}`")?;
        Ok(map)
    }

    fn literal(&mut self) -> PResult<Literal> {
        let negative = self.eat(&Tok::Minus);
        let lit = match self.peek().clone() {
            Tok::Int(i) => Literal::Integer(if negative { -i } else { i }),
            Tok::Float(f) => Literal::Float(if negative { -f } else { f }),
            Tok::Str(s) if !negative => Literal::String(s),
            Tok::Ident(s) if !negative && s.eq_ignore_ascii_case("true") => Literal::Bool(true),
            Tok::Ident(s) if !negative && s.eq_ignore_ascii_case("false") => Literal::Bool(false),
            Tok::Ident(s) if !negative && s.eq_ignore_ascii_case("null") => Literal::Null,
            Tok::Param(p) => {
                return Err(self.error(format!("query parameters are not supported (${p})"), None))
            }
            _ => return Err(self.error("expected literal value", Some("literal"))),
        };
        self.bump();
        Ok(lit)
    }

    fn return_clause(&mut self) -> PResult<ReturnClause> {
        let distinct = self.eat_kw("DISTINCT");
        if self.peek() == &Tok::Star {
            return Err(self.error("RETURN * is not supported", None));
        }
        let mut items: Vec<ReturnItem> = Vec::new();
        let mut columns: Vec<String> = Vec::new();
        loop {
            let start = self.here();
            let expr = self.expr(true)?;
            let alias = if self.eat_kw("AS") {
                Some(self.variable_name()?)
            } else {
                None
            };
            let column = alias
                .clone()
                .unwrap_or_else(|| super::format::format_expr(&expr));
            if columns.contains(&column) {
                return Err(self.error_at(start, format!("duplicate RETURN column `{column}`")));
            }
            columns.push(column);
            items.push(ReturnItem { expr, alias });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(ReturnClause { distinct, items })
    }

    // Expressions, loosest binding first.

    fn expr(&mut self, top_level_return: bool) -> PResult<Expr> {
        let start = self.here();
        let e = self.or_expr()?;
        if top_level_return {
            check_no_nested_aggregate(&e, true).map_err(|m| self.error_at(start, m))?;
        } else {
            check_no_nested_aggregate(&e, false).map_err(|m| self.error_at(start, m))?;
        }
        Ok(e)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut items = vec![self.and_expr()?];
        loop {
            if self.eat_kw("OR") {
                items.push(self.and_expr()?);
            } else if self.is_kw("XOR") {
                return Err(self.error("XOR is not supported", None));
            } else {
                break;
            }
        }
        Ok(Expr::or(items))
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut items = vec![self.not_expr()?];
        while self.eat_kw("AND") {
            items.push(self.not_expr()?);
        }
        Ok(Expr::and(items))
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("NOT") {
            Ok(Expr::Not(Box::new(self.not_expr()?)))
        } else {
            self.predicate()
        }
    }

    fn predicate(&mut self) -> PResult<Expr> {
        let left = self.atom()?;
        let op = match self.peek() {
            Tok::Eq => Some(CompareOp::Eq),
            Tok::Ne => Some(CompareOp::Ne),
            Tok::Lt => Some(CompareOp::Lt),
            Tok::Gt => Some(CompareOp::Gt),
            Tok::Le => Some(CompareOp::Le),
            Tok::Ge => Some(CompareOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let right = self.atom()?;
            return Ok(Expr::Compare {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        if self.eat_kw("IN") {
            let list = self.atom()?;
            return Ok(Expr::In {
                item: Box::new(left),
                list: Box::new(list),
            });
        }
        let string_op = if self.eat_kw("CONTAINS") {
            Some(StringOp::Contains)
        } else if self.is_kw("STARTS") {
            self.bump();
            self.expect_kw("WITH")?;
            Some(StringOp::StartsWith)
        } else if self.is_kw("ENDS") {
            self.bump();
            self.expect_kw("WITH")?;
            Some(StringOp::EndsWith)
        } else {
            None
        };
        if let Some(op) = string_op {
            let right = self.atom()?;
            return Ok(Expr::StringMatch {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        if self.eat_kw("IS") {
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull {
                expr: Box::new(left),
                negated,
            });
        }
        if matches!(self.peek(), Tok::Plus | Tok::Star | Tok::Slash) {
            return Err(self.error("arithmetic is not supported", None));
        }
        Ok(left)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.here();
        match self.peek().clone() {
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::Minus | Tok::Param(_) => {
                Ok(Expr::Literal(self.literal()?))
            }
            Tok::Ident(s)
                if s.eq_ignore_ascii_case("true")
                    || s.eq_ignore_ascii_case("false")
                    || s.eq_ignore_ascii_case("null") =>
            {
                Ok(Expr::Literal(self.literal()?))
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.or_expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(&Tok::RBracket, "`]`")?;
                }
                Ok(Expr::List(items))
            }
            Tok::LParen => {
                // Bare pattern predicate `(a)-[:r]->(b)` or parenthesized expression.
                let save = self.pos;
                let saved_scopes = self.scopes.clone();
                self.scopes.push(Vec::new());
                if let Ok(chain) = self.chain() {
                    if !chain.rels.is_empty() {
                        self.scopes.pop();
                        return Ok(Expr::Exists(SubPattern {
                            patterns: vec![chain],
                            where_clause: None,
                        }));
                    }
                }
                self.pos = save;
                self.scopes = saved_scopes;
                self.bump();
                let e = self.or_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("exists") => {
                self.bump();
                match self.peek() {
                    Tok::LBrace => Ok(Expr::Exists(self.subpattern_braced()?)),
                    Tok::LParen => {
                        self.bump();
                        if !matches!(self.peek(), Tok::LParen) {
                            return Err(self.error(
                                "exists() on a property is deprecated; use IS NOT NULL",
                                None,
                            ));
                        }
                        self.scopes.push(Vec::new());
                        let chain = self.chain()?;
                        self.scopes.pop();
                        self.expect(&Tok::RParen, "`)`")?;
                        Ok(Expr::Exists(SubPattern {
                            patterns: vec![chain],
                            where_clause: None,
                        }))
                    }
                    _ => Err(self.error("expected `{` or `(` after EXISTS", Some("`{`"))),
                }
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("count") && self.peek_at(1) == &Tok::LBrace => {
                self.bump();
                Ok(Expr::CountPattern(self.subpattern_braced()?))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("count") && self.peek_at(1) == &Tok::LParen => {
                self.bump();
                self.bump();
                let arg = if self.eat(&Tok::Star) {
                    CountArg::Star
                } else {
                    let distinct = self.eat_kw("DISTINCT");
                    if self.peek() == &Tok::LParen
                        && matches!(self.peek_at(1), Tok::Ident(_) | Tok::RParen | Tok::Colon)
                    {
                        // count((a)-->(b)) is not a valid aggregate argument
                        let save = self.pos;
                        let saved = self.scopes.clone();
                        self.scopes.push(Vec::new());
                        let is_pattern = self.chain().map(|c| !c.rels.is_empty()).unwrap_or(false);
                        self.pos = save;
                        self.scopes = saved;
                        if is_pattern {
                            return Err(
                                self.error("pattern inside count(); use COUNT { pattern }", None)
                            );
                        }
                    }
                    CountArg::Expr {
                        distinct,
                        expr: Box::new(self.or_expr()?),
                    }
                };
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::Count(arg))
            }
            Tok::Ident(_) | Tok::Quoted(_) if self.peek_at(1) == &Tok::LParen => {
                let name = match self.bump().tok {
                    Tok::Ident(s) | Tok::Quoted(s) => s,
                    _ => unreachable!(),
                };
                let function = Function::lookup(&name).ok_or_else(|| {
                    self.error_at(start, format!("unsupported function `{name}`"))
                })?;
                self.bump();
                if function == Function::Size && self.peek() == &Tok::LParen {
                    let save = self.pos;
                    let saved = self.scopes.clone();
                    self.scopes.push(Vec::new());
                    let is_pattern = self.chain().map(|c| !c.rels.is_empty()).unwrap_or(false);
                    self.pos = save;
                    self.scopes = saved;
                    if is_pattern {
                        return Err(self.error_at(
                            start,
                            "size() of a pattern is deprecated; use COUNT { pattern }",
                        ));
                    }
                }
                let arg = self.or_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::Function {
                    function,
                    arg: Box::new(arg),
                })
            }
            Tok::Ident(_) | Tok::Quoted(_) => {
                if let Some(e) = self.unsupported_clause() {
                    return Err(e);
                }
                let name = self.variable_name()?;
                if self.lookup(&name).is_none() {
                    return Err(self.error_at(start, format!("variable `{name}` is not defined")));
                }
                if self.eat(&Tok::Dot) {
                    let key = self.symbolic_name()?;
                    Ok(Expr::Property {
                        variable: name,
                        key,
                    })
                } else {
                    Ok(Expr::Variable(name))
                }
            }
            _ => Err(self.error("expected expression", Some("expression"))),
        }
    }

    /// `{ [MATCH] pattern, ... [WHERE expr] }` with its own variable scope.
    fn subpattern_braced(&mut self) -> PResult<SubPattern> {
        self.expect(&Tok::LBrace, "`{`")?;
        self.scopes.push(Vec::new());
        self.eat_kw("MATCH");
        let patterns = self.pattern_list();
        let result = patterns.and_then(|patterns| {
            let where_clause = if self.eat_kw("WHERE") {
                Some(Box::new(self.expr(false)?))
            } else {
                None
            };
            self.expect(&Tok::RBrace, "`}`")?;
            Ok(SubPattern {
                patterns,
                where_clause,
            })
        });
        self.scopes.pop();
        result
    }
}

fn check_no_nested_aggregate(e: &Expr, allow_top: bool) -> Result<(), String> {
    fn walk(e: &Expr) -> Result<(), String> {
        if e.is_aggregate() {
            return Err("aggregate count() is only allowed as a whole RETURN item".into());
        }
        let mut res = Ok(());
        e.for_each_child(&mut |c| {
            if res.is_ok() {
                res = walk(c);
            }
        });
        res
    }
    match e {
        Expr::Count(CountArg::Expr { expr, .. }) if allow_top => walk(expr),
        Expr::Count(CountArg::Star) if allow_top => Ok(()),
        other => walk(other),
    }
}

fn order_key_resolves(expr: &Expr, ret: &ReturnClause) -> bool {
    ret.items.iter().any(|item| {
        &item.expr == expr || matches!((expr, &item.alias), (Expr::Variable(v), Some(a)) if v == a)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PINK1: &str = r#"MATCH (g:gene_or_protein {name:"pink1"})-[:associated_with]->(d:disease) RETURN d.id AS ID, d.name AS Name"#;

    #[test]
    fn error_positions_count_characters() {
        let e = parse("MATCH (n {name: \"é\"} RETURN n").unwrap_err();
        assert_eq!(e.position, 21);
    }

    #[test]
    fn pink1_structure() {
        let q = parse(PINK1).unwrap();
        assert_eq!(q.matches.len(), 1);
        let chain = &q.matches[0].patterns[0];
        assert_eq!(chain.nodes.len(), 2);
        assert_eq!(chain.rels.len(), 1);
        assert_eq!(chain.rels[0].rel_type.as_deref(), Some("associated_with"));
        assert_eq!(chain.rels[0].direction, Direction::Outgoing);
        assert_eq!(
            chain.nodes[0].properties.get("name"),
            Some(&Literal::String("pink1".into()))
        );
        assert_eq!(q.ret.items.len(), 2);
        assert!(q.ret.items.iter().all(|i| i.alias.is_some()));
        assert_eq!(q.column_names(), vec!["ID", "Name"]);
    }

    #[test]
    fn minimal_query() {
        let q = parse("MATCH (n) RETURN n").unwrap();
        assert_eq!(q.matches[0].patterns[0].nodes[0].label, None);
        assert_eq!(q.ret.items[0].expr, Expr::Variable("n".into()));
    }

    #[test]
    fn unclosed_parenthesis_is_located() {
        let err = parse("MATCH (n RETURN n").unwrap_err();
        assert_eq!(err.position, 9);
        assert!(err.position < "MATCH (n RETURN n".len());
    }

    #[test]
    fn unbound_variables_rejected() {
        assert!(parse("MATCH (n) RETURN m").is_err());
        assert!(parse("MATCH (n) WHERE m.name = 'x' RETURN n").is_err());
        // later clause variables are not visible in an earlier WHERE
        assert!(parse("MATCH (n) WHERE m.x = 1 MATCH (m) RETURN n").is_err());
        // subpattern locals are not visible outside
        assert!(parse("MATCH (n) WHERE EXISTS { (n)-->(k) } RETURN k").is_err());
        assert!(parse("MATCH (n) WHERE EXISTS { (n)-->(k) WHERE k.name = 'a' } RETURN n").is_ok());
    }

    #[test]
    fn variable_kind_conflicts() {
        assert!(parse("MATCH (a)-[a]->(b) RETURN a").is_err());
        assert!(parse("MATCH (a)-[r]->(b), (b)-[r]->(c) RETURN a").is_err());
        assert!(parse("MATCH (a)-->(b), (b)-->(a) RETURN a").is_ok());
    }

    #[test]
    fn unsupported_constructs_are_named() {
        let cases = [
            ("OPTIONAL MATCH (n) RETURN n", "OPTIONAL MATCH"),
            ("MATCH (n) WITH n RETURN n", "WITH"),
            ("MATCH (n) CREATE (m) RETURN n", "CREATE"),
            ("MATCH (a)-[*1..3]->(b) RETURN a", "variable-length"),
            ("MATCH (n) RETURN size((n)-->())", "size()"),
            ("MATCH (n) RETURN foo(n)", "unsupported function `foo`"),
            ("MATCH (n) RETURN *", "RETURN *"),
        ];
        for (q, needle) in cases {
            let e = parse(q).unwrap_err();
            assert!(e.message.contains(needle), "{q}: {}", e.message);
        }
    }

    #[test]
    fn aggregates_only_at_top_level() {
        assert!(parse("MATCH (n) RETURN count(n)").is_ok());
        assert!(parse("MATCH (n) RETURN COUNT(DISTINCT n.name) AS c").is_ok());
        assert!(parse("MATCH (n) WHERE count(n) > 1 RETURN n").is_err());
        assert!(parse("MATCH (n) RETURN toLower(count(n))").is_err());
    }

    #[test]
    fn boolean_structure_is_flattened() {
        let q = parse("MATCH (n) WHERE (n.a = 1 AND n.b = 2) AND n.c = 3 RETURN n").unwrap();
        match q.matches[0].where_clause.as_ref().unwrap() {
            Expr::And(items) => assert_eq!(items.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pattern_predicates() {
        let q = parse("MATCH (d:drug) WHERE NOT (d)-[:side_effect]->() RETURN d").unwrap();
        assert!(matches!(
            q.matches[0].where_clause,
            Some(Expr::Not(ref inner)) if matches!(**inner, Expr::Exists(_))
        ));
        let q = parse("MATCH (d:drug) WHERE COUNT { (d)-[:off_label_use]->() } > COUNT { (d)-[:indication]->() } RETURN d.name").unwrap();
        assert!(matches!(
            q.matches[0].where_clause,
            Some(Expr::Compare { .. })
        ));
    }

    #[test]
    fn order_by_must_reference_columns() {
        assert!(parse("MATCH (n) RETURN n.name AS x ORDER BY x DESC LIMIT 3").is_ok());
        assert!(parse("MATCH (n) RETURN n.name ORDER BY n.name").is_ok());
        assert!(parse("MATCH (n) RETURN n.name ORDER BY n.id").is_err());
    }

    #[test]
    fn duplicate_columns_rejected() {
        assert!(parse("MATCH (n) RETURN n, n").is_err());
        assert!(parse("MATCH (n) RETURN n.a AS x, n.b AS x").is_err());
    }
}
