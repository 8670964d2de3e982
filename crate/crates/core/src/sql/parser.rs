//! Recursive-descent parser over the raw query text.
//!
//! Column names are matched against the table header when one is given
//! (longest case-insensitive match), so unquoted multi-word names work.

use crate::algebra::{AggFunc, ArithOp, Comparator, Direction};
use crate::cell::{parse_cell, parse_decimal, Cell};

use super::{Expr, Predicate, SqlAst, SqlError};

const RESERVED: [&str; 36] = [
    "select",
    "from",
    "where",
    "group",
    "by",
    "having",
    "order",
    "limit",
    "and",
    "or",
    "not",
    "in",
    "is",
    "null",
    "asc",
    "desc",
    "distinct",
    "as",
    "join",
    "inner",
    "left",
    "right",
    "full",
    "cross",
    "natural",
    "on",
    "union",
    "intersect",
    "except",
    "over",
    "like",
    "between",
    "offset",
    "outer",
    "using",
    "all",
];

const JOIN_WORDS: [&str; 7] = ["join", "inner", "left", "right", "full", "cross", "natural"];
const SET_OPS: [&str; 3] = ["union", "intersect", "except"];

/// Parses a query. With a header, bare column names may contain spaces.
pub fn parse_sql(text: &str, header: Option<&[String]>) -> Result<SqlAst, SqlError> {
    let mut names: Vec<String> = header.map(<[String]>::to_vec).unwrap_or_default();
    names.sort_by_key(|n| std::cmp::Reverse(n.len()));
    let mut p = Parser {
        src: text,
        pos: 0,
        header: names,
    };
    let ast = p.query(0)?;
    p.skip_ws();
    p.reject_set_ops()?;
    p.eat_symbol(";");
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("end of query"));
    }
    Ok(ast)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    header: Vec<String>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn syntax(&self, expected: &str) -> SqlError {
        SqlError::Syntax {
            position: self.pos,
            expected: expected.to_string(),
        }
    }

    fn at_boundary(&self, len: usize) -> bool {
        self.rest()[len..]
            .chars()
            .next()
            .is_none_or(|c| !is_word_char(c))
    }

    fn peek_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let r = self.rest();
        r.len() >= kw.len()
            && r.is_char_boundary(kw.len())
            && r[..kw.len()].eq_ignore_ascii_case(kw)
            && self.at_boundary(kw.len())
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.syntax(&kw.to_uppercase()))
        }
    }

    fn peek_symbol(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(s)
    }

    fn eat_symbol(&mut self, s: &str) -> bool {
        if self.peek_symbol(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, s: &str) -> Result<(), SqlError> {
        if self.eat_symbol(s) {
            Ok(())
        } else {
            Err(self.syntax(&format!("`{s}`")))
        }
    }

    fn unsupported(name: &str) -> SqlError {
        SqlError::UnsupportedConstruct(name.to_string())
    }

    fn reject_set_ops(&mut self) -> Result<(), SqlError> {
        for op in SET_OPS {
            if self.peek_keyword(op) {
                return Err(Parser::unsupported(&op.to_uppercase()));
            }
        }
        Ok(())
    }

    fn query(&mut self, depth: usize) -> Result<SqlAst, SqlError> {
        self.expect_keyword("select")?;
        let distinct = self.eat_keyword("distinct");
        let select = self.expr(depth)?;
        if self.peek_symbol(",") {
            return Err(Parser::unsupported("multi-column SELECT"));
        }
        self.expect_keyword("from")?;
        let from = self.table_name()?;
        for w in JOIN_WORDS {
            if self.peek_keyword(w) {
                return Err(Parser::unsupported("JOIN"));
            }
        }
        if self.peek_symbol(",") {
            return Err(Parser::unsupported("comma-joined tables"));
        }
        let filter = if self.eat_keyword("where") {
            Some(self.predicate(depth)?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            group_by.push(self.column()?);
            while self.eat_symbol(",") {
                group_by.push(self.column()?);
            }
        }
        let having = if self.eat_keyword("having") {
            if group_by.is_empty() {
                return Err(Parser::unsupported("HAVING without GROUP BY"));
            }
            Some(self.predicate(depth)?)
        } else {
            None
        };
        let order_by = if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            let key = self.expr(depth)?;
            let dir = if self.eat_keyword("desc") {
                Direction::Desc
            } else {
                self.eat_keyword("asc");
                Direction::Asc
            };
            if self.peek_symbol(",") {
                return Err(Parser::unsupported("multiple ORDER BY keys"));
            }
            if distinct {
                return Err(Parser::unsupported("DISTINCT with ORDER BY"));
            }
            Some((key, dir))
        } else {
            None
        };
        let limit = if self.eat_keyword("limit") {
            self.skip_ws();
            let start = self.pos;
            let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
            if digits == 0 {
                return Err(self.syntax("a row count"));
            }
            self.pos += digits;
            let k: usize = self.src[start..self.pos]
                .parse()
                .map_err(|_| self.syntax("a row count"))?;
            if k == 0 {
                return Err(Parser::unsupported("LIMIT 0"));
            }
            if self.peek_keyword("offset") || self.peek_symbol(",") {
                return Err(Parser::unsupported("LIMIT with OFFSET"));
            }
            Some(k)
        } else {
            None
        };
        if distinct && !group_by.is_empty() {
            return Err(Parser::unsupported("DISTINCT with GROUP BY"));
        }
        Ok(SqlAst {
            distinct,
            select,
            from,
            filter,
            group_by,
            having,
            order_by,
            limit,
        })
    }

    fn table_name(&mut self) -> Result<String, SqlError> {
        self.skip_ws();
        if self.peek_symbol("(") {
            return Err(Parser::unsupported("subquery in FROM"));
        }
        if let Some(name) = self.backtick()? {
            return Ok(name);
        }
        let len = self
            .rest()
            .chars()
            .take_while(|c| is_word_char(*c))
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return Err(self.syntax("a table name"));
        }
        let name = self.rest()[..len].to_string();
        self.pos += len;
        Ok(name)
    }

    fn backtick(&mut self) -> Result<Option<String>, SqlError> {
        if !self.peek_symbol("`") {
            return Ok(None);
        }
        let start = self.pos;
        let body = &self.rest()[1..];
        match body.find('`') {
            Some(end) => {
                self.pos += end + 2;
                Ok(Some(body[..end].to_string()))
            }
            None => {
                self.pos = start;
                Err(self.syntax("closing backtick"))
            }
        }
    }

    /// A column reference: header match, backtick name, or bare words.
    fn column(&mut self) -> Result<String, SqlError> {
        self.skip_ws();
        if let Some(name) = self.backtick()? {
            return Ok(name);
        }
        let r = self.rest();
        for h in &self.header {
            let n = h.len();
            if n > 0
                && r.len() >= n
                && r.is_char_boundary(n)
                && r[..n].eq_ignore_ascii_case(h)
                && (!h.ends_with(is_word_char) || self.at_boundary(n))
            {
                let name = h.clone();
                self.pos += n;
                return Ok(name);
            }
        }
        let mut words: Vec<&str> = Vec::new();
        loop {
            self.skip_ws();
            let r = self.rest();
            let len: usize = r
                .chars()
                .take_while(|c| is_word_char(*c))
                .map(char::len_utf8)
                .sum();
            if len == 0 || RESERVED.contains(&r[..len].to_ascii_lowercase().as_str()) {
                break;
            }
            words.push(&r[..len]);
            self.pos += len;
        }
        if words.is_empty() {
            return Err(self.syntax("a column name"));
        }
        Ok(words.join(" "))
    }

    fn expr(&mut self, depth: usize) -> Result<Expr, SqlError> {
        let mut lhs = self.term(depth)?;
        loop {
            let op = if self.eat_symbol("+") {
                ArithOp::Add
            } else if self.peek_symbol("-") {
                self.pos += 1;
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term(depth)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self, depth: usize) -> Result<Expr, SqlError> {
        let mut lhs = self.factor(depth)?;
        loop {
            let op = if self.eat_symbol("*") {
                ArithOp::Mul
            } else if self.eat_symbol("/") {
                ArithOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor(depth)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn factor(&mut self, depth: usize) -> Result<Expr, SqlError> {
        self.skip_ws();
        if self.eat_symbol("(") {
            if self.peek_keyword("select") {
                if depth > 0 {
                    return Err(Parser::unsupported("nested subquery"));
                }
                let q = self.query(depth + 1)?;
                self.reject_set_ops()?;
                self.expect_symbol(")")?;
                return Ok(Expr::Subquery(Box::new(q)));
            }
            let e = self.expr(depth)?;
            self.expect_symbol(")")?;
            return Ok(e);
        }
        if self.peek_symbol("-") {
            let save = self.pos;
            self.pos += 1;
            if let Some(Cell::Number(d)) = self.number() {
                return Ok(Expr::Literal(Cell::number(-d)));
            }
            self.pos = save + 1;
            let inner = self.factor(depth)?;
            return Ok(Expr::Binary {
                op: ArithOp::Sub,
                lhs: Box::new(Expr::Literal(Cell::from(0))),
                rhs: Box::new(inner),
            });
        }
        if let Some(s) = self.string()? {
            return Ok(Expr::Literal(s));
        }
        if let Some(n) = self.number() {
            return Ok(Expr::Literal(n));
        }
        if self.eat_keyword("null") {
            return Ok(Expr::Literal(Cell::Null));
        }
        if let Some(agg) = self.aggregate(depth)? {
            return Ok(agg);
        }
        let name = self.column()?;
        if self.peek_symbol("(") {
            return Err(Parser::unsupported(&format!("function {name}")));
        }
        Ok(Expr::Column(name))
    }

    fn aggregate(&mut self, depth: usize) -> Result<Option<Expr>, SqlError> {
        let save = self.pos;
        let Some(func) = AggFunc::ALL
            .into_iter()
            .find(|f| self.peek_keyword(&f.name().to_ascii_lowercase()))
        else {
            return Ok(None);
        };
        self.pos += func.name().len();
        if !self.eat_symbol("(") {
            self.pos = save;
            return Ok(None);
        }
        if self.peek_keyword("distinct") {
            return Err(Parser::unsupported("aggregate over DISTINCT"));
        }
        let arg = if self.eat_symbol("*") {
            if func != AggFunc::Count {
                return Err(self.syntax("an expression"));
            }
            None
        } else {
            let e = self.expr(depth)?;
            if e.has_aggregate() {
                return Err(Parser::unsupported("nested aggregate"));
            }
            Some(Box::new(e))
        };
        self.expect_symbol(")")?;
        if self.peek_keyword("over") {
            return Err(Parser::unsupported("window function"));
        }
        Ok(Some(Expr::Aggregate { func, arg }))
    }

    fn string(&mut self) -> Result<Option<Cell>, SqlError> {
        self.skip_ws();
        let Some(q) = self
            .rest()
            .chars()
            .next()
            .filter(|c| *c == '\'' || *c == '"')
        else {
            return Ok(None);
        };
        let start = self.pos;
        let mut out = String::new();
        let mut chars = self.rest()[1..].char_indices();
        while let Some((i, c)) = chars.next() {
            if c == q {
                // doubled quote is an escaped quote
                if self.rest()[1 + i + 1..].starts_with(q) {
                    out.push(q);
                    chars.next();
                    continue;
                }
                self.pos += 1 + i + 1;
                return Ok(Some(parse_cell(&out)));
            }
            out.push(c);
        }
        self.pos = start;
        Err(self.syntax("closing quote"))
    }

    fn number(&mut self) -> Option<Cell> {
        self.skip_ws();
        let r = self.rest();
        let len = r
            .bytes()
            .take_while(|b| b.is_ascii_digit() || *b == b'.')
            .count();
        if len == 0 || !self.at_boundary(len) {
            return None;
        }
        let d = parse_decimal(&r[..len])?;
        self.pos += len;
        Some(Cell::number(d))
    }

    fn predicate(&mut self, depth: usize) -> Result<Predicate, SqlError> {
        let mut lhs = self.conjunction(depth)?;
        while self.eat_keyword("or") {
            let rhs = self.conjunction(depth)?;
            lhs = Predicate::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self, depth: usize) -> Result<Predicate, SqlError> {
        let mut lhs = self.atom(depth)?;
        while self.eat_keyword("and") {
            let rhs = self.atom(depth)?;
            lhs = Predicate::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self, depth: usize) -> Result<Predicate, SqlError> {
        if self.peek_keyword("not") {
            return Err(Parser::unsupported("NOT"));
        }
        if self.peek_symbol("(") {
            let save = self.pos;
            self.pos += 1;
            if !self.peek_keyword("select") {
                if let Ok(p) = self.predicate(depth) {
                    if self.eat_symbol(")") {
                        return Ok(p);
                    }
                }
            }
            self.pos = save;
        }
        self.comparison(depth)
    }

    fn comparison(&mut self, depth: usize) -> Result<Predicate, SqlError> {
        let lhs = self.expr(depth)?;
        if self.eat_keyword("is") {
            let negated = self.eat_keyword("not");
            self.expect_keyword("null")?;
            return Ok(Predicate::IsNull { expr: lhs, negated });
        }
        let negated = self.eat_keyword("not");
        if self.eat_keyword("in") {
            return Ok(Predicate::InList {
                expr: lhs,
                list: self.in_list()?,
                negated,
            });
        }
        if negated {
            if self.peek_keyword("like") {
                return Err(Parser::unsupported("LIKE"));
            }
            return Err(self.syntax("IN"));
        }
        if self.peek_keyword("like") {
            return Err(Parser::unsupported("LIKE"));
        }
        if self.eat_keyword("between") {
            let lo = self.expr(depth)?;
            self.expect_keyword("and")?;
            let hi = self.expr(depth)?;
            return Ok(Predicate::And(
                Box::new(Predicate::Compare {
                    lhs: lhs.clone(),
                    cmp: Comparator::Ge,
                    rhs: lo,
                }),
                Box::new(Predicate::Compare {
                    lhs,
                    cmp: Comparator::Le,
                    rhs: hi,
                }),
            ));
        }
        let cmp = [
            (">=", Comparator::Ge),
            ("<=", Comparator::Le),
            ("<>", Comparator::Ne),
            ("!=", Comparator::Ne),
            ("==", Comparator::Eq),
            ("=", Comparator::Eq),
            (">", Comparator::Gt),
            ("<", Comparator::Lt),
        ]
        .into_iter()
        .find(|(s, _)| self.eat_symbol(s))
        .map(|(_, c)| c)
        .ok_or_else(|| self.syntax("a comparison operator"))?;
        let rhs = self.expr(depth)?;
        Ok(Predicate::Compare { lhs, cmp, rhs })
    }

    fn in_list(&mut self) -> Result<Vec<Cell>, SqlError> {
        self.expect_symbol("(")?;
        if self.peek_keyword("select") {
            return Err(Parser::unsupported("IN subquery"));
        }
        let mut list = vec![self.constant()?];
        while self.eat_symbol(",") {
            list.push(self.constant()?);
        }
        self.expect_symbol(")")?;
        Ok(list)
    }

    fn constant(&mut self) -> Result<Cell, SqlError> {
        self.skip_ws();
        let negative = self.eat_symbol("-");
        let c = match self.string()? {
            Some(c) => c,
            None => self.number().ok_or_else(|| self.syntax("a constant"))?,
        };
        let c = match (negative, c) {
            (true, Cell::Number(d)) => Cell::number(-d),
            (true, _) => return Err(self.syntax("a number after `-`")),
            (false, c) => c,
        };
        if c.is_null() {
            return Err(Parser::unsupported("empty string in IN list"));
        }
        Ok(c)
    }
}
