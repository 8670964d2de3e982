//! Graph linearization and its inverse.
//!
//! Items (operators and values) are separated by `||`. In alias schemes each
//! node is emitted once as a record `N<k> ...`, the operator and value records
//! are split into two sections by `|||`, and operator records name their
//! children by alias. Inside values rows are separated by `|`, columns by `,`
//! and group members by `,,`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::algebra::{project, AggFunc, ArithOp, Comparator, Direction, Operator, Value};
use crate::cell::{parse_cell, parse_decimal, Cell};
use crate::graph::{Graph, GraphBuilder, GraphError, NodeId, Payload};
use crate::table::{BoolColumn, CellGroup, GroupTable, Table};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("parse error at byte {position}: {reason}")]
    Parse { position: usize, reason: String },
    #[error("unresolved alias {0}")]
    UnresolvedAlias(String),
    #[error("alias {0} defined twice")]
    DuplicateAlias(String),
    #[error("alias {0} is part of a cycle")]
    Cycle(String),
    #[error("record {0} is not reachable from the root")]
    Unreachable(String),
    #[error("{op} takes {expected} operands, got {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl LinearizeError {
    pub fn code(&self) -> &'static str {
        match self {
            LinearizeError::Parse { .. } => "ParseError",
            LinearizeError::UnresolvedAlias(_) => "UnresolvedAlias",
            LinearizeError::DuplicateAlias(_) => "DuplicateAlias",
            LinearizeError::Cycle(_) => "Cycle",
            LinearizeError::Unreachable(_) => "Unreachable",
            LinearizeError::Arity { .. } => "ArityError",
            LinearizeError::Graph(g) => g.code(),
        }
    }
}

fn parse_err(position: usize, reason: impl Into<String>) -> LinearizeError {
    LinearizeError::Parse {
        position,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TablePosition {
    Inline,
    Start,
    End,
}

/// The six valid combinations of traversal order, aliasing and table placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinearizationScheme {
    PreInline,
    PostInline,
    PreAliasStart,
    PreAliasEnd,
    PostAliasStart,
    PostAliasEnd,
}

impl LinearizationScheme {
    pub const ALL: [LinearizationScheme; 6] = [
        LinearizationScheme::PreInline,
        LinearizationScheme::PostInline,
        LinearizationScheme::PreAliasStart,
        LinearizationScheme::PreAliasEnd,
        LinearizationScheme::PostAliasStart,
        LinearizationScheme::PostAliasEnd,
    ];

    /// `None` for the invalid combinations (inline tables with aliases and vice versa).
    pub fn from_parts(order: Order, aliases: bool, tables: TablePosition) -> Option<Self> {
        use LinearizationScheme::*;
        match (order, aliases, tables) {
            (Order::Pre, false, TablePosition::Inline) => Some(PreInline),
            (Order::Post, false, TablePosition::Inline) => Some(PostInline),
            (Order::Pre, true, TablePosition::Start) => Some(PreAliasStart),
            (Order::Pre, true, TablePosition::End) => Some(PreAliasEnd),
            (Order::Post, true, TablePosition::Start) => Some(PostAliasStart),
            (Order::Post, true, TablePosition::End) => Some(PostAliasEnd),
            _ => None,
        }
    }

    pub fn order(self) -> Order {
        use LinearizationScheme::*;
        match self {
            PreInline | PreAliasStart | PreAliasEnd => Order::Pre,
            PostInline | PostAliasStart | PostAliasEnd => Order::Post,
        }
    }

    pub fn aliases(self) -> bool {
        !matches!(
            self,
            LinearizationScheme::PreInline | LinearizationScheme::PostInline
        )
    }

    pub fn table_position(self) -> TablePosition {
        use LinearizationScheme::*;
        match self {
            PreInline | PostInline => TablePosition::Inline,
            PreAliasStart | PostAliasStart => TablePosition::Start,
            PreAliasEnd | PostAliasEnd => TablePosition::End,
        }
    }

    pub fn name(self) -> &'static str {
        use LinearizationScheme::*;
        match self {
            PreInline => "pre",
            PostInline => "post",
            PreAliasStart => "pre-alias-start",
            PreAliasEnd => "pre-alias-end",
            PostAliasStart => "post-alias-start",
            PostAliasEnd => "post-alias-end",
        }
    }
}

impl fmt::Display for LinearizationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinearizationScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        let s = s.strip_suffix("-inline").unwrap_or(&s);
        let s = s.strip_suffix("-order").unwrap_or(s);
        let s = s.replace("-order-", "-");
        LinearizationScheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown scheme `{s}` (expected one of {})",
                    LinearizationScheme::ALL
                        .map(LinearizationScheme::name)
                        .join(", ")
                )
            })
    }
}

/// First word of an item: up to whitespace or a comma.
fn first_word(s: &str) -> &str {
    let end = s
        .find(|c: char| c.is_whitespace() || c == ',')
        .unwrap_or(s.len());
    &s[..end]
}

const KEYWORDS: [&str; 27] = [
    "where", "having", "gb", "count", "sum", "avg", "min", "max", "ob", "limit", "project", "in",
    "not", "is", "and", "or", ">", "<", ">=", "<=", "=", "!=", "<>", "+", "-", "*", "/",
];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word.to_lowercase().as_str())
}

fn is_alias(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some('N' | 'n')) && word.len() > 1 && chars.all(|c| c.is_ascii_digit())
}

fn escape(s: &str, quote: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '|' | ',' | '\\') || (quote && c == '\'') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Text that would be read back as something else gets a leading backslash.
fn needs_guard(s: &str) -> bool {
    let w = first_word(s);
    parse_cell(s) != Cell::Text(s.to_string())
        || s.eq_ignore_ascii_case("t")
        || s.eq_ignore_ascii_case("f")
        || s.starts_with('[')
        || is_keyword(w)
        || is_alias(w)
}

const NULL_MARK: &str = "[NULL]";

fn cell_markup(c: &Cell) -> String {
    match c {
        Cell::Number(_) => c.render(),
        Cell::Null => NULL_MARK.to_string(),
        Cell::Text(s) => {
            let mut e = escape(s, false);
            // surrounding whitespace would be trimmed away on parsing
            if let Some(last) = s.chars().last().filter(|c| c.is_whitespace()) {
                e.insert(e.len() - last.len_utf8(), '\\');
            }
            if s.starts_with(char::is_whitespace) && !e.starts_with('\\') {
                e.insert(0, '\\');
            }
            if !e.contains('\\') && needs_guard(s) {
                format!("\\{e}")
            } else {
                e
            }
        }
    }
}

fn empty_markup(width: usize) -> String {
    if width == 1 {
        "[EMPTY]".to_string()
    } else {
        format!("[EMPTY {width}]")
    }
}

/// Renders a value as markup.
pub fn linearize_value(v: &Value) -> String {
    match v {
        Value::Table(t) => {
            if t.num_rows() == 0 {
                return empty_markup(t.width());
            }
            t.rows()
                .iter()
                .map(|r| r.iter().map(cell_markup).collect::<Vec<_>>().join(", "))
                .collect::<Vec<_>>()
                .join(" | ")
        }
        Value::Groups(g) => {
            let body = if g.num_rows() == 0 {
                empty_markup(g.width())
            } else {
                g.rows()
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|grp| {
                                grp.members()
                                    .iter()
                                    .map(cell_markup)
                                    .collect::<Vec<_>>()
                                    .join(",, ")
                            })
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .collect::<Vec<_>>()
                    .join(" | ")
            };
            let singletons = g.rows().iter().all(|r| r.iter().all(|grp| grp.len() == 1));
            if singletons {
                format!("[GROUPS] {body}")
            } else {
                body
            }
        }
        Value::Bool(b) => {
            if b.is_empty() {
                return "[BOOL] [EMPTY]".to_string();
            }
            b.bits()
                .iter()
                .map(|x| if *x { "t" } else { "f" })
                .collect::<Vec<_>>()
                .join(" | ")
        }
    }
}

fn constant_markup(c: &Cell) -> String {
    match c {
        Cell::Text(s) => format!("'{}'", escape(s, true)),
        other => other.render(),
    }
}

fn constant_list(list: &[Cell]) -> String {
    list.iter()
        .map(constant_markup)
        .collect::<Vec<_>>()
        .join(", ")
}

/// The operator's token sequence (name plus parameters).
pub fn operator_token(op: &Operator) -> String {
    match op {
        Operator::Projection(cols) => format!(
            "PROJECT {}",
            cols.iter()
                .map(|c| format!("'{}'", escape(c, true)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Operator::Comparison(Comparator::In(l)) => format!("IN {}", constant_list(l)),
        Operator::Comparison(Comparator::NotIn(l)) => format!("NOT IN {}", constant_list(l)),
        Operator::Comparison(c) => c.symbol().to_string(),
        Operator::Having => "HAVING".to_string(),
        Operator::Selection => "WHERE".to_string(),
        Operator::GroupBy { keys: 1 } => "GB".to_string(),
        Operator::GroupBy { keys } => format!("GB {keys}"),
        Operator::Aggregation(f) => f.name().to_string(),
        Operator::TermwiseOp(o) => o.symbol().to_string(),
        Operator::OrderBy(d) => format!("OB {}", d.name()),
        Operator::Limit(k) => format!("Limit {k}"),
    }
}

/// Replaces projections of value leaves by their results.
fn normalize_projections(g: &Graph) -> Graph {
    let mut b = GraphBuilder::new();
    let mut map: Vec<NodeId> = Vec::with_capacity(g.len());
    for node in g.nodes() {
        let id = match &node.payload {
            Payload::Value(v) => b.value(v.clone()),
            Payload::Op(op) => {
                let children: Vec<NodeId> = node.children.iter().map(|c| map[*c]).collect();
                let computed = match (op, b.node(children[0]).value()) {
                    (Operator::Projection(cols), Some(Value::Table(t))) => {
                        project(t, cols).ok().map(Table::without_header)
                    }
                    _ => None,
                };
                match computed {
                    Some(t) => b.value(t),
                    None => b.op(op.clone(), children).expect("graph nodes are valid"),
                }
            }
        };
        map.push(id);
    }
    b.finish(map[g.root()]).expect("root exists")
}

fn item_text(g: &Graph, id: NodeId) -> String {
    match &g.node(id).payload {
        Payload::Value(v) => linearize_value(v),
        Payload::Op(op) => operator_token(op),
    }
}

fn pre_order_items(g: &Graph, id: NodeId, out: &mut Vec<String>) {
    out.push(item_text(g, id));
    for c in &g.node(id).children {
        pre_order_items(g, *c, out);
    }
}

/// Children as printed in alias records: masks before data.
fn record_children(op: &Operator, children: &[NodeId]) -> Vec<NodeId> {
    match op {
        Operator::Selection | Operator::Having => vec![children[1], children[0]],
        _ => children.to_vec(),
    }
}

/// Node visit order for alias numbering.
fn alias_order(g: &Graph, order: Order) -> Vec<NodeId> {
    let mut seen = vec![false; g.len()];
    let mut out = Vec::with_capacity(g.len());
    fn pre(g: &Graph, id: NodeId, seen: &mut [bool], out: &mut Vec<NodeId>) {
        if seen[id] {
            return;
        }
        seen[id] = true;
        out.push(id);
        for c in &g.node(id).children {
            pre(g, *c, seen, out);
        }
    }
    fn post(g: &Graph, id: NodeId, seen: &mut [bool], out: &mut Vec<NodeId>) {
        if seen[id] {
            return;
        }
        seen[id] = true;
        for c in g.node(id).children.iter().rev() {
            post(g, *c, seen, out);
        }
        out.push(id);
    }
    match order {
        Order::Pre => pre(g, g.root(), &mut seen, &mut out),
        Order::Post => post(g, g.root(), &mut seen, &mut out),
    }
    out
}

fn join_items(items: &[String]) -> String {
    items.join(" || ")
}

/// Linearizes a graph under a scheme.
pub fn linearize(g: &Graph, scheme: LinearizationScheme) -> String {
    let g = normalize_projections(g);
    if !scheme.aliases() {
        let mut items = Vec::new();
        pre_order_items(&g, g.root(), &mut items);
        if scheme.order() == Order::Post {
            items.reverse();
        }
        return format!("{} ||", join_items(&items));
    }
    let order = alias_order(&g, scheme.order());
    let mut alias = vec![0usize; g.len()];
    for (k, id) in order.iter().enumerate() {
        alias[*id] = k + 1;
    }
    let mut ops = Vec::new();
    let mut values = Vec::new();
    for id in &order {
        let node = g.node(*id);
        match &node.payload {
            Payload::Value(v) => values.push(format!("N{} {}", alias[*id], linearize_value(v))),
            Payload::Op(op) => {
                let mut rec = format!("N{} {}", alias[*id], operator_token(op));
                for c in record_children(op, &node.children) {
                    rec.push_str(&format!(" N{}", alias[c]));
                }
                ops.push(rec);
            }
        }
    }
    if ops.is_empty() {
        return format!("{} ||", join_items(&values));
    }
    let (first, second) = match scheme.table_position() {
        TablePosition::Start => (values, ops),
        _ => (ops, values),
    };
    format!("{} ||| {} ||", join_items(&first), join_items(&second))
}

/// An item with its byte offset in the sequence.
#[derive(Debug, Clone)]
struct Item {
    position: usize,
    text: String,
}

/// Splits a sequence into sections (at `|||`) of items (at `||`).
fn split_sections(seq: &str) -> Result<Vec<Vec<Item>>, LinearizeError> {
    let bytes = seq.as_bytes();
    let mut sections: Vec<Vec<Item>> = vec![Vec::new()];
    let mut start = 0;
    let mut i = 0;
    let close = |sections: &mut Vec<Vec<Item>>, start: usize, end: usize, at_end: bool| {
        let raw = &seq[start..end];
        let text = trim_markup(raw);
        if text.is_empty() {
            if at_end && !sections.last().expect("non-empty").is_empty() {
                return Ok(());
            }
            return Err(parse_err(start, "empty item"));
        }
        let lead = raw.len() - raw.trim_start().len();
        sections.last_mut().expect("non-empty").push(Item {
            position: start + lead,
            text: text.to_string(),
        });
        Ok(())
    };
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'|' => {
                let run = bytes[i..].iter().take_while(|b| **b == b'|').count();
                match run {
                    1 => i += 1,
                    2 | 3 => {
                        let at_end = seq[i + run..].trim().is_empty();
                        close(&mut sections, start, i, false)?;
                        if run == 3 {
                            if at_end {
                                return Err(parse_err(i, "empty section"));
                            }
                            sections.push(Vec::new());
                        }
                        i += run;
                        start = i;
                    }
                    _ => return Err(parse_err(i, format!("unexpected run of {run} `|`"))),
                }
            }
            _ => i += 1,
        }
    }
    close(&mut sections, start, seq.len(), true)?;
    Ok(sections)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Comma,
}

fn tokenize_op(text: &str, base: usize) -> Result<Vec<(usize, Tok)>, LinearizeError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c == ',' {
            out.push((base + i, Tok::Comma));
        } else if c == '\'' {
            let mut s = String::new();
            let mut closed = false;
            while let Some((_, c)) = chars.next() {
                match c {
                    '\\' => {
                        if let Some((_, n)) = chars.next() {
                            s.push(n);
                        }
                    }
                    '\'' => {
                        closed = true;
                        break;
                    }
                    other => s.push(other),
                }
            }
            if !closed {
                return Err(parse_err(base + i, "unterminated quote"));
            }
            out.push((base + i, Tok::Quoted(s)));
        } else {
            let mut s = String::from(c);
            while let Some((_, n)) = chars.peek() {
                if n.is_whitespace() || *n == ',' || *n == '\'' {
                    break;
                }
                s.push(*n);
                chars.next();
            }
            out.push((base + i, Tok::Word(s)));
        }
    }
    Ok(out)
}

struct OpParser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl<'a> OpParser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn word(&mut self) -> Option<String> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Some(w.clone())
            }
            _ => None,
        }
    }

    fn expect_word(&mut self, want: &str) -> Result<(), LinearizeError> {
        let at = self.here();
        match self.word() {
            Some(w) if w.eq_ignore_ascii_case(want) => Ok(()),
            _ => Err(parse_err(at, format!("expected `{want}`"))),
        }
    }

    fn constant(&mut self) -> Result<Cell, LinearizeError> {
        let at = self.here();
        match self.peek() {
            Some(Tok::Quoted(s)) => {
                self.pos += 1;
                Ok(Cell::Text(s.clone()))
            }
            Some(Tok::Word(w)) if !is_alias(w) => match parse_decimal(w) {
                Some(d) => {
                    self.pos += 1;
                    Ok(Cell::number(d))
                }
                None => Err(parse_err(at, format!("expected a constant, found `{w}`"))),
            },
            _ => Err(parse_err(at, "expected a constant")),
        }
    }

    fn constants(&mut self) -> Result<Vec<Cell>, LinearizeError> {
        let mut list = vec![self.constant()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            list.push(self.constant()?);
        }
        Ok(list)
    }

    fn operator(&mut self) -> Result<Operator, LinearizeError> {
        let at = self.here();
        let head = self
            .word()
            .ok_or_else(|| parse_err(at, "expected an operator"))?
            .to_lowercase();
        let op = match head.as_str() {
            "where" => Operator::Selection,
            "having" => Operator::Having,
            "gb" => {
                let keys = match self.peek() {
                    Some(Tok::Word(w)) if w.bytes().all(|b| b.is_ascii_digit()) => {
                        let n = w
                            .parse()
                            .map_err(|_| parse_err(self.here(), "bad key count"))?;
                        self.pos += 1;
                        n
                    }
                    _ => 1,
                };
                Operator::GroupBy { keys }
            }
            "ob" => {
                let at = self.here();
                match self.word().map(|w| w.to_lowercase()).as_deref() {
                    Some("asc") => Operator::OrderBy(Direction::Asc),
                    Some("desc") => Operator::OrderBy(Direction::Desc),
                    _ => return Err(parse_err(at, "OB needs asc or desc")),
                }
            }
            "limit" => {
                let at = self.here();
                let k = self
                    .word()
                    .filter(|w| !is_alias(w))
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| parse_err(at, "Limit needs a row count"))?;
                Operator::Limit(k)
            }
            "project" => {
                let mut cols = Vec::new();
                loop {
                    let at = self.here();
                    match self.peek() {
                        Some(Tok::Quoted(s)) => {
                            cols.push(s.clone());
                            self.pos += 1;
                        }
                        _ => return Err(parse_err(at, "PROJECT needs quoted column names")),
                    }
                    if self.peek() != Some(&Tok::Comma) {
                        break;
                    }
                    self.pos += 1;
                }
                Operator::Projection(cols)
            }
            "in" => Operator::Comparison(Comparator::In(self.constants()?)),
            "not" => {
                self.expect_word("in")?;
                Operator::Comparison(Comparator::NotIn(self.constants()?))
            }
            "is" => {
                let at = self.here();
                match self.word().map(|w| w.to_lowercase()).as_deref() {
                    Some("null") => Operator::Comparison(Comparator::IsNull),
                    Some("not") => {
                        self.expect_word("null")?;
                        Operator::Comparison(Comparator::IsNotNull)
                    }
                    _ => return Err(parse_err(at, "expected NULL or NOT NULL")),
                }
            }
            "and" => Operator::Comparison(Comparator::And),
            "or" => Operator::Comparison(Comparator::Or),
            ">" => Operator::Comparison(Comparator::Gt),
            "<" => Operator::Comparison(Comparator::Lt),
            ">=" => Operator::Comparison(Comparator::Ge),
            "<=" => Operator::Comparison(Comparator::Le),
            "=" => Operator::Comparison(Comparator::Eq),
            "!=" | "<>" => Operator::Comparison(Comparator::Ne),
            other => {
                if let Some(f) = AggFunc::from_name(other) {
                    Operator::Aggregation(f)
                } else if let Some(o) = ArithOp::from_symbol(other) {
                    Operator::TermwiseOp(o)
                } else {
                    return Err(parse_err(at, format!("unknown operator `{other}`")));
                }
            }
        };
        op.validate().map_err(|e| parse_err(at, e.to_string()))?;
        Ok(op)
    }
}

fn parse_operator(
    text: &str,
    base: usize,
) -> Result<(Operator, Vec<(usize, String)>), LinearizeError> {
    let toks = tokenize_op(text, base)?;
    let mut p = OpParser {
        toks: &toks,
        pos: 0,
        end: base + text.len(),
    };
    let op = p.operator()?;
    let rest = toks[p.pos..]
        .iter()
        .map(|(pos, t)| match t {
            Tok::Word(w) => Ok((*pos, w.clone())),
            _ => Err(parse_err(*pos, "unexpected token after operator")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((op, rest))
}

fn is_operator_item(text: &str) -> bool {
    is_keyword(first_word(text))
}

struct RawCell {
    text: String,
    escaped: bool,
}

/// Parses value markup back into a value.
pub fn parse_value(text: &str) -> Result<Value, String> {
    let mut rest = trim_markup(text);
    let mut force_groups = false;
    let mut force_bool = false;
    if let Some(r) = rest.strip_prefix("[GROUPS]") {
        force_groups = true;
        rest = r.trim_start();
    } else if let Some(r) = rest.strip_prefix("[BOOL]") {
        force_bool = true;
        rest = r.trim_start();
    }
    if let Some(width) = parse_empty_marker(rest)? {
        return Ok(if force_groups {
            Value::Groups(GroupTable::new(None, width, vec![]).map_err(|e| e.to_string())?)
        } else if force_bool {
            if width != 1 {
                return Err("boolean columns have one column".into());
            }
            Value::Bool(BoolColumn::default())
        } else {
            Value::Table(Table::with_width(None, width, vec![]).map_err(|e| e.to_string())?)
        });
    }
    if force_bool {
        return Err("[BOOL] marks only empty columns".into());
    }
    // rows -> columns -> members
    let mut rows: Vec<Vec<Vec<RawCell>>> = vec![vec![vec![]]];
    let mut cur = String::new();
    let mut escaped = false;
    let push_cell = |rows: &mut Vec<Vec<Vec<RawCell>>>, cur: &mut String, escaped: &mut bool| {
        rows.last_mut()
            .and_then(|r| r.last_mut())
            .expect("non-empty")
            .push(RawCell {
                text: std::mem::take(cur),
                escaped: std::mem::take(escaped),
            });
    };
    let mut chars = rest.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                escaped = true;
                cur.push(c);
                if let Some(n) = chars.next() {
                    cur.push(n);
                }
            }
            '|' => {
                push_cell(&mut rows, &mut cur, &mut escaped);
                rows.push(vec![vec![]]);
            }
            ',' => {
                let mut run = 1;
                while chars.peek() == Some(&',') {
                    chars.next();
                    run += 1;
                }
                push_cell(&mut rows, &mut cur, &mut escaped);
                match run {
                    1 => rows.last_mut().expect("non-empty").push(vec![]),
                    2 => {}
                    _ => return Err(format!("unexpected run of {run} `,`")),
                }
            }
            other => cur.push(other),
        }
    }
    push_cell(&mut rows, &mut cur, &mut escaped);

    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err("rows have different numbers of columns".into());
    }
    let grouped = force_groups || rows.iter().flatten().any(|members| members.len() > 1);
    let all_bits = !grouped
        && width == 1
        && rows
            .iter()
            .all(|r| !r[0][0].escaped && matches!(r[0][0].text.trim(), "t" | "f"));
    if all_bits {
        return Ok(Value::Bool(
            rows.iter().map(|r| r[0][0].text.trim() == "t").collect(),
        ));
    }
    let decoded: Vec<Vec<Vec<Cell>>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|members| {
                    members
                        .iter()
                        .map(decode_cell)
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if grouped {
        let rows = decoded
            .into_iter()
            .map(|r| r.into_iter().map(CellGroup).collect())
            .collect();
        Ok(Value::Groups(
            GroupTable::new(None, width, rows).map_err(|e| e.to_string())?,
        ))
    } else {
        let rows = decoded
            .into_iter()
            .map(|r| r.into_iter().map(|mut m| m.remove(0)).collect())
            .collect();
        Ok(Value::Table(
            Table::with_width(None, width, rows).map_err(|e| e.to_string())?,
        ))
    }
}

fn parse_empty_marker(s: &str) -> Result<Option<usize>, String> {
    let Some(inner) = s.strip_prefix("[EMPTY").and_then(|r| r.strip_suffix(']')) else {
        return Ok(None);
    };
    let inner = inner.trim();
    if inner.is_empty() {
        return Ok(Some(1));
    }
    match inner.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Some(n)),
        _ => Err(format!("bad empty marker `{s}`")),
    }
}

/// Trims surrounding whitespace, keeping a trailing escaped character.
fn trim_markup(s: &str) -> &str {
    let start = s.trim_start();
    let end = start.trim_end();
    let slashes = end.chars().rev().take_while(|c| *c == '\\').count();
    if slashes % 2 == 1 && end.len() < start.len() {
        let next = start[end.len()..].chars().next().expect("trimmed a char");
        &start[..end.len() + next.len_utf8()]
    } else {
        end
    }
}

fn decode_cell(raw: &RawCell) -> Result<Cell, String> {
    let t = trim_markup(&raw.text);
    if raw.escaped {
        return Ok(Cell::Text(unescape(t)));
    }
    if t == NULL_MARK {
        return Ok(Cell::Null);
    }
    match parse_cell(t) {
        Cell::Null => Err("empty cell".into()),
        c => Ok(c),
    }
}

fn value_at(item: &Item) -> Result<Value, LinearizeError> {
    parse_value(&item.text).map_err(|reason| parse_err(item.position, reason))
}

fn arity_error(op: &Operator, found: usize) -> LinearizeError {
    LinearizeError::Arity {
        op: operator_token(op),
        expected: op.arity(),
        found,
    }
}

/// Parses a linearized sequence back into a graph.
pub fn delinearize(seq: &str, scheme: LinearizationScheme) -> Result<Graph, LinearizeError> {
    let sections = split_sections(seq)?;
    if sections.iter().all(Vec::is_empty) {
        return Err(parse_err(0, "empty sequence"));
    }
    if scheme.aliases() {
        delinearize_aliases(sections, scheme)
    } else {
        if sections.len() != 1 {
            return Err(parse_err(0, "`|||` is only valid in alias schemes"));
        }
        let mut items = sections.into_iter().next().expect("one section");
        if scheme.order() == Order::Post {
            items.reverse();
        }
        let mut b = GraphBuilder::new();
        let mut next = 0;
        let root = inline_node(&items, &mut next, &mut b)?;
        if next != items.len() {
            return Err(parse_err(items[next].position, "trailing items"));
        }
        Ok(b.finish(root)?)
    }
}

fn inline_node(
    items: &[Item],
    next: &mut usize,
    b: &mut GraphBuilder,
) -> Result<NodeId, LinearizeError> {
    let item = &items[*next];
    *next += 1;
    if !is_operator_item(&item.text) {
        return Ok(b.value(value_at(item)?));
    }
    let (op, rest) = parse_operator(&item.text, item.position)?;
    if let Some((pos, w)) = rest.first() {
        return Err(parse_err(*pos, format!("unexpected `{w}` after operator")));
    }
    let mut children = Vec::with_capacity(op.arity());
    for _ in 0..op.arity() {
        if *next >= items.len() {
            return Err(arity_error(&op, children.len()));
        }
        children.push(inline_node(items, next, b)?);
    }
    Ok(b.op(op, children)?)
}

enum Record {
    Value(Value),
    Op(Operator, Vec<String>),
}

fn split_alias(item: &Item) -> Result<(String, &str), LinearizeError> {
    let alias = first_word(&item.text);
    if !is_alias(alias) {
        return Err(parse_err(item.position, "record must start with an alias"));
    }
    Ok((alias.to_uppercase(), trim_markup(&item.text[alias.len()..])))
}

fn delinearize_aliases(
    sections: Vec<Vec<Item>>,
    scheme: LinearizationScheme,
) -> Result<Graph, LinearizeError> {
    let (value_items, op_items) = match sections.len() {
        1 => (sections[0].clone(), Vec::new()),
        2 => match scheme.table_position() {
            TablePosition::Start => (sections[0].clone(), sections[1].clone()),
            _ => (sections[1].clone(), sections[0].clone()),
        },
        _ => return Err(parse_err(0, "too many `|||` sections")),
    };
    if op_items.is_empty() && value_items.len() != 1 {
        return Err(parse_err(
            0,
            "a sequence without operators holds exactly one value",
        ));
    }
    let mut records: HashMap<String, Record> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for item in &value_items {
        let (alias, body) = split_alias(item)?;
        let v = parse_value(body).map_err(|r| parse_err(item.position, r))?;
        if records.insert(alias.clone(), Record::Value(v)).is_some() {
            return Err(LinearizeError::DuplicateAlias(alias));
        }
        order.push(alias);
    }
    let mut op_aliases = Vec::new();
    for item in &op_items {
        let (alias, body) = split_alias(item)?;
        if !is_operator_item(body) {
            return Err(parse_err(item.position, "expected an operator record"));
        }
        let base = item.position + (item.text.len() - body.len());
        let (op, rest) = parse_operator(body, base)?;
        let mut children = Vec::with_capacity(rest.len());
        for (pos, w) in rest {
            if !is_alias(&w) {
                return Err(parse_err(pos, format!("expected an alias, found `{w}`")));
            }
            children.push(w.to_uppercase());
        }
        if children.len() != op.arity() {
            return Err(arity_error(&op, children.len()));
        }
        if matches!(op, Operator::Selection | Operator::Having) {
            children.swap(0, 1);
        }
        if records
            .insert(alias.clone(), Record::Op(op, children))
            .is_some()
        {
            return Err(LinearizeError::DuplicateAlias(alias));
        }
        op_aliases.push(alias.clone());
        order.push(alias);
    }
    let root = match scheme.order() {
        _ if op_aliases.is_empty() => order[0].clone(),
        Order::Pre => op_aliases[0].clone(),
        Order::Post => op_aliases.last().expect("non-empty").clone(),
    };

    let mut b = GraphBuilder::new();
    let mut built: HashMap<String, NodeId> = HashMap::new();
    let mut active: HashSet<String> = HashSet::new();
    // explicit stack: (alias, children pushed)
    let mut stack: Vec<(String, bool)> = vec![(root.clone(), false)];
    while let Some((alias, expanded)) = stack.pop() {
        if built.contains_key(&alias) {
            continue;
        }
        let record = records
            .get(&alias)
            .ok_or_else(|| LinearizeError::UnresolvedAlias(alias.clone()))?;
        match record {
            Record::Value(v) => {
                built.insert(alias, b.value(v.clone()));
            }
            Record::Op(op, children) => {
                if expanded {
                    let ids = children.iter().map(|c| built[c]).collect();
                    built.insert(alias.clone(), b.op(op.clone(), ids)?);
                    active.remove(&alias);
                } else {
                    if !active.insert(alias.clone()) {
                        return Err(LinearizeError::Cycle(alias));
                    }
                    stack.push((alias, true));
                    for c in children.iter().rev() {
                        if active.contains(c) {
                            return Err(LinearizeError::Cycle(c.clone()));
                        }
                        if !built.contains_key(c) {
                            stack.push((c.clone(), false));
                        }
                    }
                }
            }
        }
    }
    if let Some(unused) = order.iter().find(|a| !built.contains_key(*a)) {
        return Err(LinearizeError::Unreachable(unused.clone()));
    }
    Ok(b.finish(built[&root])?)
}

/// Model input: question followed by the flattened table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedInput {
    pub text: String,
    pub visible_row_count: usize,
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Encodes `question [HEAD] c1 | .. [ROW] 1 r1 ..`, appending rows while the
/// whitespace-token count stays within `max_tokens`. The header is always kept.
pub fn encode_input(question: &str, table: &Table, max_tokens: usize) -> EncodedInput {
    let mut text = question.trim().to_string();
    if !text.is_empty() {
        text.push(' ');
    }
    text.push_str("[HEAD] ");
    text.push_str(&table.column_names().join(" | "));
    let mut used = token_count(&text);
    let mut visible = 0;
    for (i, row) in table.rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        let chunk = format!(" [ROW] {} {}", i + 1, cells.join(" | "));
        let cost = token_count(&chunk);
        if used + cost > max_tokens {
            break;
        }
        text.push_str(&chunk);
        used += cost;
        visible += 1;
    }
    EncodedInput {
        text,
        visible_row_count: visible,
    }
}
