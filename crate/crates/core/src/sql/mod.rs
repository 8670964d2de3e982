//! The restricted SQL dialect: parsing and compilation to graphs.
//!
//! The grammar is documented in `docs/sql-dialect.ebnf`.

mod compile;
mod parser;

use thiserror::Error;

use crate::algebra::{AggFunc, ArithOp, Comparator, Direction};
use crate::cell::Cell;
use crate::graph::GraphError;

pub use compile::{synthesize_id_column, to_graph, with_id_column, ID_COLUMN};
pub use parser::parse_sql;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SqlError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SqlError {
    pub fn code(&self) -> &'static str {
        match self {
            SqlError::Syntax { .. } => "SyntaxError",
            SqlError::UnsupportedConstruct(_) => "UnsupportedConstruct",
            SqlError::UnknownColumn(_) => "UnknownColumn",
            SqlError::Graph(g) => g.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlAst {
    pub distinct: bool,
    pub select: Expr,
    pub from: String,
    pub filter: Option<Predicate>,
    pub group_by: Vec<String>,
    pub having: Option<Predicate>,
    pub order_by: Option<(Expr, Direction)>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Column(String),
    Literal(Cell),
    /// `arg` is `None` for `count(*)`.
    Aggregate {
        func: AggFunc,
        arg: Option<Box<Expr>>,
    },
    Binary {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Subquery(Box<SqlAst>),
}

impl Expr {
    pub fn has_aggregate(&self) -> bool {
        match self {
            Expr::Aggregate { .. } => true,
            Expr::Binary { lhs, rhs, .. } => lhs.has_aggregate() || rhs.has_aggregate(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    /// A binary comparator (`>`, `<`, `>=`, `<=`, `=`, `!=`).
    Compare {
        lhs: Expr,
        cmp: Comparator,
        rhs: Expr,
    },
    InList {
        expr: Expr,
        list: Vec<Cell>,
        negated: bool,
    },
    IsNull {
        expr: Expr,
        negated: bool,
    },
}

/// Parses `sql` against the table's columns (plus `id`) and compiles it.
pub fn compile_sql(
    sql: &str,
    table: &crate::table::Table,
) -> Result<crate::graph::Graph, SqlError> {
    let header = with_id_column(table).column_names();
    to_graph(&parse_sql(sql, Some(&header))?, table)
}
