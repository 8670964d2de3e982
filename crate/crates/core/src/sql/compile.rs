//! Translation of a parsed query into a computational graph.
//!
//! Every column reference becomes a Projection of the single source leaf.
//! The WHERE mask is computed over unfiltered columns and applied to each
//! column with its own Selection; with GROUP BY each needed column is grouped
//! by the filtered key columns. The builder interns nodes, so a filtered or
//! grouped column used twice is one node.

use crate::algebra::{Comparator, Operator};
use crate::cell::Cell;
use crate::graph::{Graph, GraphBuilder, NodeId};
use crate::table::Table;

use super::{Expr, Predicate, SqlAst, SqlError};

/// Name of the row-index column queries may reference.
pub const ID_COLUMN: &str = "id";

/// Single-column table of 1-based row indices.
pub fn synthesize_id_column(table: &Table) -> Table {
    Table::named_column(
        ID_COLUMN,
        (1..=table.num_rows() as i64).map(Cell::from).collect(),
    )
}

/// The table with an `id` column prepended, unless it already has one.
pub fn with_id_column(table: &Table) -> Table {
    if table.column_index(ID_COLUMN).is_some() {
        return table.clone();
    }
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(table.column_names());
    let rows = table
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = Vec::with_capacity(r.len() + 1);
            row.push(Cell::from(i as i64 + 1));
            row.extend(r.iter().cloned());
            row
        })
        .collect();
    Table::new(Some(header), rows).expect("prepending a column keeps the shape")
}

/// Compiles a query against a table into a graph.
pub fn to_graph(ast: &SqlAst, table: &Table) -> Result<Graph, SqlError> {
    let source = with_id_column(table);
    let mut b = GraphBuilder::new();
    let leaf = b.value(source.clone());
    let root = {
        let mut c = Compiler {
            b: &mut b,
            source: &source,
            leaf,
            mask: None,
            keys: Vec::new(),
            hmask: None,
        };
        c.query(ast)?
    };
    Ok(b.finish(root)?)
}

struct Compiler<'a> {
    b: &'a mut GraphBuilder,
    source: &'a Table,
    leaf: NodeId,
    mask: Option<NodeId>,
    keys: Vec<NodeId>,
    hmask: Option<NodeId>,
}

impl Compiler<'_> {
    fn op(&mut self, op: Operator, children: Vec<NodeId>) -> Result<NodeId, SqlError> {
        Ok(self.b.op(op, children)?)
    }

    fn column(&mut self, name: &str) -> Result<NodeId, SqlError> {
        let idx = self
            .source
            .column_index(name)
            .ok_or_else(|| SqlError::UnknownColumn(name.to_string()))?;
        let canonical = self.source.column_names()[idx].clone();
        self.op(Operator::Projection(vec![canonical]), vec![self.leaf])
    }

    fn literal(&mut self, c: &Cell) -> NodeId {
        self.b.value(Table::column(vec![c.clone()]))
    }

    fn subquery(&mut self, q: &SqlAst) -> Result<NodeId, SqlError> {
        let mut sub = Compiler {
            b: self.b,
            source: self.source,
            leaf: self.leaf,
            mask: None,
            keys: Vec::new(),
            hmask: None,
        };
        sub.query(q)
    }

    fn query(&mut self, ast: &SqlAst) -> Result<NodeId, SqlError> {
        if let Some(p) = &ast.filter {
            self.mask = Some(self.predicate(p, Mode::Row)?);
        }
        if !ast.group_by.is_empty() {
            let mut keys = Vec::with_capacity(ast.group_by.len());
            for k in &ast.group_by {
                let col = self.column(k)?;
                keys.push(self.filtered(col)?);
            }
            self.keys = keys;
            if let Some(h) = &ast.having {
                self.hmask = Some(self.predicate(h, Mode::Grouped)?);
            }
        }
        let mut root = self.output(&ast.select, Mode::Output)?;
        if ast.distinct {
            root = self.op(Operator::GroupBy { keys: 1 }, vec![root, root])?;
        }
        if let Some((key, dir)) = &ast.order_by {
            let key = self.output(key, Mode::Output)?;
            root = self.op(Operator::OrderBy(*dir), vec![root, key])?;
        }
        if let Some(k) = ast.limit {
            root = self.op(Operator::Limit(k), vec![root])?;
        }
        Ok(root)
    }

    fn filtered(&mut self, node: NodeId) -> Result<NodeId, SqlError> {
        match self.mask {
            Some(m) => self.op(Operator::Selection, vec![node, m]),
            None => Ok(node),
        }
    }

    /// Groups a filtered row-level node by the key columns.
    fn grouped(&mut self, node: NodeId, with_having: bool) -> Result<NodeId, SqlError> {
        let data = self.filtered(node)?;
        let mut children = self.keys.clone();
        children.push(data);
        let g = self.op(
            Operator::GroupBy {
                keys: self.keys.len(),
            },
            children,
        )?;
        match (with_having, self.hmask) {
            (true, Some(h)) => self.op(Operator::Having, vec![g, h]),
            _ => Ok(g),
        }
    }

    /// A per-row expression over unfiltered columns.
    fn row(&mut self, e: &Expr) -> Result<NodeId, SqlError> {
        match e {
            Expr::Column(name) => self.column(name),
            Expr::Literal(c) => Ok(self.literal(c)),
            Expr::Binary { op, lhs, rhs } => {
                let l = self.row(lhs)?;
                let r = self.row(rhs)?;
                self.op(Operator::TermwiseOp(*op), vec![l, r])
            }
            Expr::Subquery(q) => self.subquery(q),
            Expr::Aggregate { .. } => Err(SqlError::UnsupportedConstruct(
                "aggregate outside SELECT, HAVING or ORDER BY".into(),
            )),
        }
    }

    /// An expression in SELECT, ORDER BY or HAVING position.
    fn output(&mut self, e: &Expr, mode: Mode) -> Result<NodeId, SqlError> {
        let grouping = !self.keys.is_empty();
        let with_having = mode == Mode::Output;
        match e {
            Expr::Literal(c) => Ok(self.literal(c)),
            Expr::Subquery(q) => self.subquery(q),
            Expr::Binary { op, lhs, rhs } if e.has_aggregate() || grouping => {
                let l = self.output(lhs, mode)?;
                let r = self.output(rhs, mode)?;
                self.op(Operator::TermwiseOp(*op), vec![l, r])
            }
            Expr::Aggregate { func, arg } => {
                let arg = match arg {
                    Some(a) => self.row(a)?,
                    None => self.column(super::ID_COLUMN)?,
                };
                let operand = if grouping {
                    self.grouped(arg, with_having)?
                } else {
                    self.filtered(arg)?
                };
                self.op(Operator::Aggregation(*func), vec![operand])
            }
            _ => {
                let r = self.row(e)?;
                if grouping {
                    self.grouped(r, with_having)
                } else {
                    self.filtered(r)
                }
            }
        }
    }

    fn predicate(&mut self, p: &Predicate, mode: Mode) -> Result<NodeId, SqlError> {
        let operand = |c: &mut Compiler, e: &Expr| match mode {
            Mode::Row => c.row(e),
            _ => c.output(e, mode),
        };
        match p {
            Predicate::And(l, r) | Predicate::Or(l, r) => {
                let cmp = if matches!(p, Predicate::And(..)) {
                    Comparator::And
                } else {
                    Comparator::Or
                };
                let l = self.predicate(l, mode)?;
                let r = self.predicate(r, mode)?;
                self.op(Operator::Comparison(cmp), vec![l, r])
            }
            Predicate::Compare { lhs, cmp, rhs } => {
                // literals go on the right, where they broadcast
                let (lhs, cmp, rhs) = if is_constant(lhs) && !is_constant(rhs) {
                    (rhs, cmp.flipped(), lhs)
                } else {
                    (lhs, cmp.clone(), rhs)
                };
                let l = operand(self, lhs)?;
                let r = operand(self, rhs)?;
                self.op(Operator::Comparison(cmp), vec![l, r])
            }
            Predicate::InList {
                expr,
                list,
                negated,
            } => {
                let x = operand(self, expr)?;
                let cmp = if *negated {
                    Comparator::NotIn(list.clone())
                } else {
                    Comparator::In(list.clone())
                };
                self.op(Operator::Comparison(cmp), vec![x])
            }
            Predicate::IsNull { expr, negated } => {
                let x = operand(self, expr)?;
                let cmp = if *negated {
                    Comparator::IsNotNull
                } else {
                    Comparator::IsNull
                };
                self.op(Operator::Comparison(cmp), vec![x])
            }
        }
    }
}

fn is_constant(e: &Expr) -> bool {
    matches!(e, Expr::Literal(_) | Expr::Subquery(_))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// WHERE: unfiltered row-level columns.
    Row,
    /// HAVING: grouped columns before the Having filter.
    Grouped,
    /// SELECT and ORDER BY.
    Output,
}
