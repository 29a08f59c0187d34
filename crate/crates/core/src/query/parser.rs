use std::collections::HashSet;

use super::{EdgePattern, Filter, Limit, NodePattern, Operand, OrderBy, QueryError, QueryPlan};
use crate::graph::{Direction, EdgeType, NodeLabel};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(u64),
    Sym(char),
    Eof,
}

const KEYWORDS: [&str; 9] = ["MATCH", "WHERE", "AND", "RETURN", "ORDER", "BY", "ASC", "DESC", "LIMIT"];

struct Lexed {
    tok: Tok,
    column: usize,
}

fn syntax(column: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax { column, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Lexed>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Lexed { tok: Tok::Ident(chars[start..i].iter().collect()), column });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse().map_err(|_| syntax(column, "integer out of range"))?;
            out.push(Lexed { tok: Tok::Int(n), column });
        } else if c == '"' || c == '\'' {
            let quote = c;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(column, "unterminated string")),
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some(&e @ ('\\' | '"' | '\'')) => s.push(e),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            _ => return Err(syntax(i + 1, "invalid escape")),
                        }
                        i += 2;
                    }
                    Some(&ch) if ch == quote => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Lexed { tok: Tok::Str(s), column });
        } else if "()[]{}:,.=-<>$".contains(c) {
            out.push(Lexed { tok: Tok::Sym(c), column });
            i += 1;
        } else {
            return Err(syntax(column, format!("unexpected character {c:?}")));
        }
    }
    out.push(Lexed { tok: Tok::Eof, column: chars.len() + 1 });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("{s:?}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Int(n) => format!("integer {n}"),
        Tok::Sym(c) => format!("{c:?}"),
        Tok::Eof => "end of input".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn column(&self) -> usize {
        self.toks[self.pos].column
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, wanted: &str) -> QueryError {
        syntax(self.column(), format!("expected {wanted}, found {}", describe(self.peek())))
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn sym(&mut self, c: char) -> Result<(), QueryError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("{c:?}")))
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        match self.peek().clone() {
            Tok::Sym('$') => {
                self.bump();
                Ok(Operand::Param(self.ident("parameter name")?))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Operand::Literal(s))
            }
            _ => Err(self.unexpected("parameter or string")),
        }
    }
}

struct RawNode {
    pattern: NodePattern,
    props: Vec<(String, Operand)>,
}

fn node(p: &mut Parser) -> Result<RawNode, QueryError> {
    p.sym('(')?;
    let var = match p.peek() {
        Tok::Ident(_) => Some(p.ident("variable")?),
        _ => None,
    };
    let label = if p.eat_sym(':') {
        let name = p.ident("label")?;
        Some(name.parse::<NodeLabel>().map_err(|_| QueryError::UnknownLabelOrEdgeType(name))?)
    } else {
        None
    };
    let mut props = Vec::new();
    if p.eat_sym('{') {
        loop {
            let key = p.ident("property name")?;
            p.sym(':')?;
            props.push((key, p.operand()?));
            if !p.eat_sym(',') {
                break;
            }
        }
        p.sym('}')?;
    }
    p.sym(')')?;
    Ok(RawNode { pattern: NodePattern { var, label }, props })
}

fn edge_type(p: &mut Parser) -> Result<Option<EdgeType>, QueryError> {
    p.sym('[')?;
    let t = if p.eat_sym(':') {
        let name = p.ident("edge type")?;
        Some(name.parse::<EdgeType>().map_err(|_| QueryError::UnknownLabelOrEdgeType(name))?)
    } else {
        None
    };
    p.sym(']')?;
    Ok(t)
}

fn edge(p: &mut Parser) -> Result<EdgePattern, QueryError> {
    if p.eat_sym('<') {
        p.sym('-')?;
        let edge_type = edge_type(p)?;
        p.sym('-')?;
        Ok(EdgePattern { edge_type, direction: Direction::In })
    } else {
        p.sym('-')?;
        let edge_type = edge_type(p)?;
        p.sym('-')?;
        p.sym('>')?;
        Ok(EdgePattern { edge_type, direction: Direction::Out })
    }
}

/// Parses a query into a normalized plan (filters sorted, inline
/// properties folded into filters).
pub fn parse(text: &str) -> Result<QueryPlan, QueryError> {
    if text.trim().is_empty() {
        return Err(syntax(1, "empty query"));
    }
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    p.keyword("MATCH")?;

    let mut raw_nodes = vec![node(&mut p)?];
    let mut edges = Vec::new();
    while matches!(p.peek(), Tok::Sym('-') | Tok::Sym('<')) {
        edges.push(edge(&mut p)?);
        raw_nodes.push(node(&mut p)?);
    }

    let mut seen = HashSet::new();
    for n in &raw_nodes {
        if let Some(v) = &n.pattern.var {
            if !seen.insert(v.clone()) {
                return Err(QueryError::DuplicateVariable(v.clone()));
            }
        }
    }
    let nodes: Vec<NodePattern> = raw_nodes.iter().map(|n| n.pattern.clone()).collect();
    let position = |var: &str| {
        nodes
            .iter()
            .position(|n| n.var.as_deref() == Some(var))
            .ok_or_else(|| QueryError::UnboundVariable(var.to_string()))
    };

    let mut filters: Vec<Filter> = raw_nodes
        .iter()
        .enumerate()
        .flat_map(|(i, n)| n.props.iter().map(move |(k, v)| Filter { node: i, prop: k.clone(), value: v.clone() }))
        .collect();

    let mut where_vars = Vec::new();
    if p.is_keyword("WHERE") {
        p.bump();
        loop {
            let var = p.ident("variable")?;
            p.sym('.')?;
            let prop = p.ident("property name")?;
            p.sym('=')?;
            let value = p.operand()?;
            where_vars.push((var, prop, value));
            if !p.is_keyword("AND") {
                break;
            }
            p.bump();
        }
    }

    p.keyword("RETURN")?;
    let return_var = p.ident("variable")?;

    let mut order_by = None;
    if p.is_keyword("ORDER") {
        p.bump();
        p.keyword("BY")?;
        let var = p.ident("variable")?;
        p.sym('.')?;
        let prop = p.ident("property name")?;
        let descending = if p.is_keyword("ASC") {
            false
        } else if p.is_keyword("DESC") {
            true
        } else {
            return Err(p.unexpected("ASC or DESC"));
        };
        p.bump();
        order_by = Some(OrderBy { var, prop, descending });
    }

    let mut limit = None;
    if p.is_keyword("LIMIT") {
        p.bump();
        limit = Some(match p.bump() {
            Tok::Int(n) => Limit::Count(n),
            Tok::Sym('$') => Limit::Param(p.ident("parameter name")?),
            _ => {
                p.pos -= 1;
                return Err(p.unexpected("integer or parameter"));
            }
        });
    }
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }

    for (var, prop, value) in where_vars {
        filters.push(Filter { node: position(&var)?, prop, value });
    }
    position(&return_var)?;
    if let Some(o) = &order_by {
        position(&o.var)?;
    }
    filters.sort();
    filters.dedup();

    Ok(QueryPlan { nodes, edges, filters, return_var, order_by, limit })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn operand(o: &Operand) -> String {
    match o {
        Operand::Param(p) => format!("${p}"),
        Operand::Literal(s) => quote(s),
    }
}

/// Pretty-prints a plan. Filters on named nodes go to WHERE, filters on
/// anonymous nodes stay inline, so `parse(render(plan)) == plan`.
pub fn render(plan: &QueryPlan) -> String {
    let mut out = String::from("MATCH ");
    for (i, n) in plan.nodes.iter().enumerate() {
        if i > 0 {
            let e = &plan.edges[i - 1];
            let t = e.edge_type.map(|t| format!(":{t}")).unwrap_or_default();
            match e.direction {
                Direction::Out => out.push_str(&format!("-[{t}]->")),
                Direction::In => out.push_str(&format!("<-[{t}]-")),
            }
        }
        out.push('(');
        if let Some(v) = &n.var {
            out.push_str(v);
        }
        if let Some(l) = n.label {
            out.push(':');
            out.push_str(l.as_str());
        }
        if n.var.is_none() {
            let inline: Vec<String> = plan
                .filters
                .iter()
                .filter(|f| f.node == i)
                .map(|f| format!("{}: {}", f.prop, operand(&f.value)))
                .collect();
            if !inline.is_empty() {
                out.push_str(&format!(" {{{}}}", inline.join(", ")));
            }
        }
        out.push(')');
    }
    let conds: Vec<String> = plan
        .filters
        .iter()
        .filter_map(|f| {
            let var = plan.nodes[f.node].var.as_ref()?;
            Some(format!("{var}.{} = {}", f.prop, operand(&f.value)))
        })
        .collect();
    if !conds.is_empty() {
        out.push_str(" WHERE ");
        out.push_str(&conds.join(" AND "));
    }
    out.push_str(" RETURN ");
    out.push_str(&plan.return_var);
    if let Some(o) = &plan.order_by {
        let dir = if o.descending { "DESC" } else { "ASC" };
        out.push_str(&format!(" ORDER BY {}.{} {dir}", o.var, o.prop));
    }
    match &plan.limit {
        Some(Limit::Count(n)) => out.push_str(&format!(" LIMIT {n}")),
        Some(Limit::Param(p)) => out.push_str(&format!(" LIMIT ${p}")),
        None => {}
    }
    out
}
