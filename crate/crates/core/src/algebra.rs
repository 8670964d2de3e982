//! The nine table operators and their executable semantics.
//!
//! Every operator is a pure function from operand [`Value`]s to a result
//! [`Value`]. Row order is significant everywhere: selections keep it, group
//! keys are sorted ascending, and sorts are stable.

use std::cmp::Ordering;
use std::fmt;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell::{cells_equal, compare_cells, sort_order, Cell};
use crate::table::{BoolColumn, CellGroup, GroupTable, Table};

/// Decimal places kept by division and averages.
pub const DECIMAL_SCALE: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot order {left:?} against {right:?}")]
    IncomparableCells { left: String, right: String },
    #[error("group in row {row} has several distinct values")]
    AmbiguousGroup { row: usize },
    #[error("type error: {0}")]
    TypeError(String),
    #[error("{0} over zero non-null cells")]
    EmptyInput(&'static str),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    ArithmeticOverflow,
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("{op} takes {expected} operands, got {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
}

impl AlgebraError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AlgebraError::UnknownColumn(_) => "UnknownColumn",
            AlgebraError::ShapeMismatch(_) => "ShapeMismatch",
            AlgebraError::IncomparableCells { .. } => "IncomparableCells",
            AlgebraError::AmbiguousGroup { .. } => "AmbiguousGroup",
            AlgebraError::TypeError(_) => "TypeError",
            AlgebraError::EmptyInput(_) => "EmptyInput",
            AlgebraError::DivisionByZero => "DivisionByZero",
            AlgebraError::ArithmeticOverflow => "ArithmeticOverflow",
            AlgebraError::InvalidOperator(_) => "InvalidOperator",
            AlgebraError::Arity { .. } => "ArityError",
        }
    }
}

type Result<T> = std::result::Result<T, AlgebraError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Comparator {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
    In(Vec<Cell>),
    NotIn(Vec<Cell>),
    IsNull,
    IsNotNull,
    And,
    Or,
}

impl Comparator {
    /// Unary comparators ignore a second operand and take only one child.
    pub fn is_unary(&self) -> bool {
        matches!(
            self,
            Comparator::In(_) | Comparator::NotIn(_) | Comparator::IsNull | Comparator::IsNotNull
        )
    }

    /// The comparator with operands swapped (`a < b` iff `b > a`).
    pub fn flipped(&self) -> Comparator {
        match self {
            Comparator::Gt => Comparator::Lt,
            Comparator::Lt => Comparator::Gt,
            Comparator::Ge => Comparator::Le,
            Comparator::Le => Comparator::Ge,
            other => other.clone(),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Comparator::Gt => ">",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::In(_) => "IN",
            Comparator::NotIn(_) => "NOT IN",
            Comparator::IsNull => "IS NULL",
            Comparator::IsNotNull => "IS NOT NULL",
            Comparator::And => "AND",
            Comparator::Or => "OR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub const ALL: [AggFunc; 5] = [
        AggFunc::Count,
        AggFunc::Sum,
        AggFunc::Avg,
        AggFunc::Min,
        AggFunc::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub fn from_name(name: &str) -> Option<AggFunc> {
        AggFunc::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn from_symbol(s: &str) -> Option<ArithOp> {
        match s {
            "+" => Some(ArithOp::Add),
            "-" => Some(ArithOp::Sub),
            "*" => Some(ArithOp::Mul),
            "/" => Some(ArithOp::Div),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Asc,
    Desc,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    Projection,
    Comparison,
    Having,
    GroupBy,
    Aggregation,
    TermwiseOp,
    OrderBy,
    Limit,
    Selection,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 9] = [
        OperatorKind::Projection,
        OperatorKind::Comparison,
        OperatorKind::Having,
        OperatorKind::GroupBy,
        OperatorKind::Aggregation,
        OperatorKind::TermwiseOp,
        OperatorKind::OrderBy,
        OperatorKind::Limit,
        OperatorKind::Selection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Projection => "Projection",
            OperatorKind::Comparison => "Comparison",
            OperatorKind::Having => "Having",
            OperatorKind::GroupBy => "GroupBy",
            OperatorKind::Aggregation => "Aggregation",
            OperatorKind::TermwiseOp => "TermwiseOp",
            OperatorKind::OrderBy => "OrderBy",
            OperatorKind::Limit => "Limit",
            OperatorKind::Selection => "Selection",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An operator with its parameters.
///
/// In a computational graph the operands are child nodes, in this order:
/// `Selection`/`Having` take (data, mask); `GroupBy` takes its key columns
/// followed by the data column; `OrderBy` takes (data, key).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operator {
    Projection(Vec<String>),
    Comparison(Comparator),
    Having,
    GroupBy { keys: usize },
    Aggregation(AggFunc),
    TermwiseOp(ArithOp),
    OrderBy(Direction),
    Limit(usize),
    Selection,
}

impl Operator {
    pub fn kind(&self) -> OperatorKind {
        match self {
            Operator::Projection(_) => OperatorKind::Projection,
            Operator::Comparison(_) => OperatorKind::Comparison,
            Operator::Having => OperatorKind::Having,
            Operator::GroupBy { .. } => OperatorKind::GroupBy,
            Operator::Aggregation(_) => OperatorKind::Aggregation,
            Operator::TermwiseOp(_) => OperatorKind::TermwiseOp,
            Operator::OrderBy(_) => OperatorKind::OrderBy,
            Operator::Limit(_) => OperatorKind::Limit,
            Operator::Selection => OperatorKind::Selection,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Operator::Projection(_) | Operator::Aggregation(_) | Operator::Limit(_) => 1,
            Operator::Comparison(c) if c.is_unary() => 1,
            Operator::GroupBy { keys } => keys + 1,
            _ => 2,
        }
    }

    /// Checks parameter invariants (non-empty column lists and IN lists, `k >= 1`).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AlgebraError::InvalidOperator(m.to_string()));
        match self {
            Operator::Projection(cols) if cols.is_empty() => bad("projection needs columns"),
            Operator::GroupBy { keys: 0 } => bad("group by needs a key"),
            Operator::Limit(0) => bad("limit needs k >= 1"),
            Operator::Comparison(Comparator::In(l) | Comparator::NotIn(l)) if l.is_empty() => {
                bad("IN needs constants")
            }
            Operator::Comparison(Comparator::In(l) | Comparator::NotIn(l))
                if l.iter().any(Cell::is_null) =>
            {
                bad("IN constants cannot be null")
            }
            _ => Ok(()),
        }
    }

    /// Applies the operator to its operands.
    pub fn apply(&self, args: &[&Value]) -> Result<Value> {
        if args.len() != self.arity() {
            return Err(AlgebraError::Arity {
                op: self.kind().name().to_string(),
                expected: self.arity(),
                found: args.len(),
            });
        }
        match self {
            Operator::Projection(cols) => Ok(Value::Table(project(args[0].as_table()?, cols)?)),
            Operator::Comparison(c) if c.is_unary() => Ok(Value::Bool(compare(args[0], None, c)?)),
            Operator::Comparison(c) => Ok(Value::Bool(compare(args[0], Some(args[1]), c)?)),
            Operator::Selection => Ok(Value::Table(select(
                args[0].as_table()?,
                args[1].as_bool()?,
            )?)),
            Operator::Having => Ok(Value::Groups(having(
                args[0].as_groups()?,
                args[1].as_bool()?,
            )?)),
            Operator::GroupBy { keys } => {
                let key_tables = args[..*keys]
                    .iter()
                    .map(|v| v.as_table())
                    .collect::<Result<Vec<_>>>()?;
                Ok(Value::Groups(group_by_operands(
                    &key_tables,
                    args[*keys].as_table()?,
                )?))
            }
            Operator::Aggregation(f) => Ok(Value::Table(aggregate(args[0], *f)?)),
            Operator::TermwiseOp(o) => Ok(Value::Table(termwise(
                args[0].as_table()?,
                args[1].as_table()?,
                *o,
            )?)),
            Operator::OrderBy(d) => order_by(args[0], args[1], *d),
            Operator::Limit(k) => limit(args[0], *k),
        }
    }
}

/// A table, group table, or boolean column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Table(Table),
    Groups(GroupTable),
    Bool(BoolColumn),
}

impl Value {
    pub fn tag(&self) -> &'static str {
        match self {
            Value::Table(_) => "table",
            Value::Groups(_) => "groups",
            Value::Bool(_) => "bool",
        }
    }

    pub fn num_rows(&self) -> usize {
        match self {
            Value::Table(t) => t.num_rows(),
            Value::Groups(g) => g.num_rows(),
            Value::Bool(b) => b.len(),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Value::Table(t) => t.width(),
            Value::Groups(g) => g.width(),
            Value::Bool(_) => 1,
        }
    }

    pub fn without_header(self) -> Value {
        match self {
            Value::Table(t) => Value::Table(t.without_header()),
            Value::Groups(g) => Value::Groups(g.without_header()),
            b => b,
        }
    }

    pub fn as_table(&self) -> Result<&Table> {
        match self {
            Value::Table(t) => Ok(t),
            other => Err(AlgebraError::TypeError(format!(
                "expected a table, got {}",
                other.tag()
            ))),
        }
    }

    pub fn as_groups(&self) -> Result<&GroupTable> {
        match self {
            Value::Groups(g) => Ok(g),
            other => Err(AlgebraError::TypeError(format!(
                "expected a group table, got {}",
                other.tag()
            ))),
        }
    }

    pub fn as_bool(&self) -> Result<&BoolColumn> {
        match self {
            Value::Bool(b) => Ok(b),
            other => Err(AlgebraError::TypeError(format!(
                "expected a boolean column, got {}",
                other.tag()
            ))),
        }
    }
}

impl From<Table> for Value {
    fn from(t: Table) -> Self {
        Value::Table(t)
    }
}

impl From<GroupTable> for Value {
    fn from(g: GroupTable) -> Self {
        Value::Groups(g)
    }
}

impl From<BoolColumn> for Value {
    fn from(b: BoolColumn) -> Self {
        Value::Bool(b)
    }
}

fn require_single_column(width: usize, what: &str) -> Result<()> {
    if width == 1 {
        Ok(())
    } else {
        Err(AlgebraError::ShapeMismatch(format!(
            "{what} must have one column, has {width}"
        )))
    }
}

fn rows_mismatch(what: &str, expected: usize, found: usize) -> AlgebraError {
    AlgebraError::ShapeMismatch(format!("{what}: expected {expected} rows, found {found}"))
}

pub fn project(t: &Table, columns: &[String]) -> Result<Table> {
    let indices = columns
        .iter()
        .map(|c| {
            t.column_index(c)
                .ok_or_else(|| AlgebraError::UnknownColumn(c.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = t
        .rows()
        .iter()
        .map(|r| indices.iter().map(|i| r[*i].clone()).collect())
        .collect();
    Table::with_width(Some(columns.to_vec()), columns.len(), rows)
        .map_err(|e| AlgebraError::ShapeMismatch(e.to_string()))
}

/// Per-row left-hand cells of a comparison; group rows contribute their distinct value.
fn comparison_cells(v: &Value) -> Result<Vec<&Cell>> {
    match v {
        Value::Table(t) => {
            require_single_column(t.width(), "comparison operand")?;
            Ok(t.column_cells(0).collect())
        }
        Value::Groups(g) => {
            require_single_column(g.width(), "comparison operand")?;
            g.rows()
                .iter()
                .enumerate()
                .map(|(row, r)| {
                    r[0].distinct_value()
                        .ok_or(AlgebraError::AmbiguousGroup { row })
                })
                .collect()
        }
        Value::Bool(_) => Err(AlgebraError::TypeError(
            "cannot compare a boolean column".into(),
        )),
    }
}

fn in_list(cell: &Cell, list: &[Cell]) -> bool {
    list.iter().any(|c| cells_equal(cell, c))
}

/// Evaluates a comparator row by row.
///
/// A one-row right-hand side is broadcast. `IN`-style comparators ignore the
/// right-hand side; over a group table, `IN` holds when every member of the
/// group is in the list.
pub fn compare(lhs: &Value, rhs: Option<&Value>, cmp: &Comparator) -> Result<BoolColumn> {
    match cmp {
        Comparator::And | Comparator::Or => {
            let a = lhs.as_bool()?;
            let b = rhs
                .ok_or_else(|| AlgebraError::ShapeMismatch("AND/OR needs two operands".into()))?
                .as_bool()?;
            let b_at = broadcast_index(a.len(), b.len(), "boolean operand")?;
            let and = matches!(cmp, Comparator::And);
            return Ok((0..a.len())
                .map(|r| {
                    let (x, y) = (a.bits()[r], b.bits()[b_at(r)]);
                    if and {
                        x && y
                    } else {
                        x || y
                    }
                })
                .collect());
        }
        Comparator::In(list) | Comparator::NotIn(list) => {
            let negate = matches!(cmp, Comparator::NotIn(_));
            let hits: Vec<bool> = match lhs {
                Value::Groups(g) => {
                    require_single_column(g.width(), "comparison operand")?;
                    g.rows()
                        .iter()
                        .map(|r| r[0].members().iter().all(|c| in_list(c, list)))
                        .collect()
                }
                other => comparison_cells(other)?
                    .into_iter()
                    .map(|c| in_list(c, list))
                    .collect(),
            };
            return Ok(hits.into_iter().map(|h| h != negate).collect());
        }
        Comparator::IsNull | Comparator::IsNotNull => {
            let want_null = matches!(cmp, Comparator::IsNull);
            return Ok(comparison_cells(lhs)?
                .into_iter()
                .map(|c| c.is_null() == want_null)
                .collect());
        }
        _ => {}
    }
    let left = comparison_cells(lhs)?;
    let rhs = rhs.ok_or_else(|| {
        AlgebraError::ShapeMismatch(format!("{} needs two operands", cmp.symbol()))
    })?;
    let rhs_table = rhs.as_table()?;
    require_single_column(rhs_table.width(), "comparison operand")?;
    let right: Vec<&Cell> = rhs_table.column_cells(0).collect();
    let at = broadcast_index(left.len(), right.len(), "comparison")?;
    left.iter()
        .enumerate()
        .map(|(r, a)| {
            let b = right[at(r)];
            let ord = compare_cells(a, b);
            match cmp {
                Comparator::Eq => Ok(ord == Some(Ordering::Equal)),
                Comparator::Ne => Ok(ord != Some(Ordering::Equal)),
                _ => {
                    let ord = ord.ok_or_else(|| AlgebraError::IncomparableCells {
                        left: a.render(),
                        right: b.render(),
                    })?;
                    Ok(match cmp {
                        Comparator::Gt => ord == Ordering::Greater,
                        Comparator::Lt => ord == Ordering::Less,
                        Comparator::Ge => ord != Ordering::Less,
                        Comparator::Le => ord != Ordering::Greater,
                        _ => unreachable!("handled above"),
                    })
                }
            }
        })
        .collect()
}

/// Maps a row of the primary operand to the row of a possibly broadcast operand.
fn broadcast_index(primary: usize, other: usize, what: &str) -> Result<fn(usize) -> usize> {
    if other == primary {
        Ok(|r| r)
    } else if other == 1 {
        Ok(|_| 0)
    } else {
        Err(rows_mismatch(what, primary, other))
    }
}

pub fn select(t: &Table, mask: &BoolColumn) -> Result<Table> {
    if mask.len() != t.num_rows() {
        return Err(rows_mismatch("selection mask", t.num_rows(), mask.len()));
    }
    let rows = t
        .rows()
        .iter()
        .zip(mask.bits())
        .filter(|(_, keep)| **keep)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(t.with_rows(rows))
}

pub fn having(g: &GroupTable, mask: &BoolColumn) -> Result<GroupTable> {
    if mask.len() != g.num_rows() {
        return Err(rows_mismatch("having mask", g.num_rows(), mask.len()));
    }
    let rows = g
        .rows()
        .iter()
        .zip(mask.bits())
        .filter(|(_, keep)| **keep)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(g.with_rows(rows))
}

/// Partitions row indices by key, groups in ascending key order, rows in source order.
fn partition_rows(keys: &[Vec<&Cell>]) -> Vec<Vec<usize>> {
    let key_cmp = |a: usize, b: usize| {
        keys[a]
            .iter()
            .zip(&keys[b])
            .map(|(x, y)| sort_order(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|a, b| key_cmp(*a, *b));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for r in order {
        match groups.last_mut() {
            Some(g) if key_cmp(g[0], r) == Ordering::Equal => g.push(r),
            _ => groups.push(vec![r]),
        }
    }
    groups
}

fn groups_of(t: &Table, partition: &[Vec<usize>]) -> Vec<Vec<CellGroup>> {
    partition
        .iter()
        .map(|rows| {
            (0..t.width())
                .map(|c| CellGroup(rows.iter().map(|r| t.cell(*r, c).clone()).collect()))
                .collect()
        })
        .collect()
}

/// Groups every column of `t` by equal values of the columns `keys`.
pub fn group_by(t: &Table, keys: &[String]) -> Result<GroupTable> {
    let idx = keys
        .iter()
        .map(|k| {
            t.column_index(k)
                .ok_or_else(|| AlgebraError::UnknownColumn(k.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let key_rows: Vec<Vec<&Cell>> = t
        .rows()
        .iter()
        .map(|r| idx.iter().map(|i| &r[*i]).collect())
        .collect();
    let partition = partition_rows(&key_rows);
    GroupTable::new(
        t.header().map(<[String]>::to_vec),
        t.width(),
        groups_of(t, &partition),
    )
    .map_err(|e| AlgebraError::ShapeMismatch(e.to_string()))
}

/// Group By in graph form: key columns and the grouped data arrive as separate operands.
pub fn group_by_operands(keys: &[&Table], data: &Table) -> Result<GroupTable> {
    for k in keys {
        require_single_column(k.width(), "group key")?;
        if k.num_rows() != data.num_rows() {
            return Err(rows_mismatch("group key", data.num_rows(), k.num_rows()));
        }
    }
    let key_rows: Vec<Vec<&Cell>> = (0..data.num_rows())
        .map(|r| keys.iter().map(|k| k.cell(r, 0)).collect())
        .collect();
    let partition = partition_rows(&key_rows);
    GroupTable::new(
        data.header().map(<[String]>::to_vec),
        data.width(),
        groups_of(data, &partition),
    )
    .map_err(|e| AlgebraError::ShapeMismatch(e.to_string()))
}

fn decimal_op(r: Option<Decimal>) -> Result<Decimal> {
    r.ok_or(AlgebraError::ArithmeticOverflow)
}

fn rounded(d: Decimal) -> Decimal {
    d.round_dp_with_strategy(DECIMAL_SCALE, RoundingStrategy::MidpointNearestEven)
}

fn aggregate_cells<'a>(cells: impl Iterator<Item = &'a Cell>, f: AggFunc) -> Result<Cell> {
    let present: Vec<&Cell> = cells.filter(|c| !c.is_null()).collect();
    if f == AggFunc::Count {
        return Ok(Cell::from(present.len() as i64));
    }
    let numbers = present
        .iter()
        .map(|c| {
            c.as_number().ok_or_else(|| {
                AlgebraError::TypeError(format!("{} over text {:?}", f.name(), c.render()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = match f {
        AggFunc::Count => unreachable!("handled above"),
        AggFunc::Sum => numbers
            .iter()
            .try_fold(Decimal::ZERO, |acc, x| decimal_op(acc.checked_add(*x)))?,
        AggFunc::Avg => {
            if numbers.is_empty() {
                return Err(AlgebraError::EmptyInput("AVG"));
            }
            let sum = numbers
                .iter()
                .try_fold(Decimal::ZERO, |acc, x| decimal_op(acc.checked_add(*x)))?;
            rounded(decimal_op(sum.checked_div(Decimal::from(numbers.len())))?)
        }
        AggFunc::Min => *numbers
            .iter()
            .min()
            .ok_or(AlgebraError::EmptyInput("MIN"))?,
        AggFunc::Max => *numbers
            .iter()
            .max()
            .ok_or(AlgebraError::EmptyInput("MAX"))?,
    };
    Ok(Cell::number(value))
}

/// Aggregates a single column: the whole column of a table, or each group of a group table.
pub fn aggregate(v: &Value, f: AggFunc) -> Result<Table> {
    match v {
        Value::Table(t) => {
            require_single_column(t.width(), "aggregation operand")?;
            Ok(Table::column(vec![aggregate_cells(t.column_cells(0), f)?]))
        }
        Value::Groups(g) => {
            require_single_column(g.width(), "aggregation operand")?;
            let cells = g
                .rows()
                .iter()
                .map(|r| aggregate_cells(r[0].members().iter(), f))
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::column(cells))
        }
        Value::Bool(_) => Err(AlgebraError::TypeError(
            "cannot aggregate a boolean column".into(),
        )),
    }
}

fn number_of(c: &Cell) -> Result<Decimal> {
    c.as_number().ok_or_else(|| {
        AlgebraError::TypeError(format!("arithmetic over non-number {:?}", c.render()))
    })
}

/// Row-wise arithmetic over two single-column tables; either side may be broadcast.
pub fn termwise(a: &Table, b: &Table, o: ArithOp) -> Result<Table> {
    require_single_column(a.width(), "arithmetic operand")?;
    require_single_column(b.width(), "arithmetic operand")?;
    let n = match (a.num_rows(), b.num_rows()) {
        (x, y) if x == y => x,
        (1, y) => y,
        (x, 1) => x,
        (x, y) => return Err(rows_mismatch("arithmetic", x, y)),
    };
    let pick = |t: &Table, r: usize| if t.num_rows() == 1 { 0 } else { r };
    let cells = (0..n)
        .map(|r| {
            let x = number_of(a.cell(pick(a, r), 0))?;
            let y = number_of(b.cell(pick(b, r), 0))?;
            let v = match o {
                ArithOp::Add => decimal_op(x.checked_add(y))?,
                ArithOp::Sub => decimal_op(x.checked_sub(y))?,
                ArithOp::Mul => decimal_op(x.checked_mul(y))?,
                ArithOp::Div => {
                    if y.is_zero() {
                        return Err(AlgebraError::DivisionByZero);
                    }
                    rounded(decimal_op(x.checked_div(y))?)
                }
            };
            Ok(Cell::number(v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::column(cells))
}

/// Sort keys: table cells, or the distinct value of each group.
fn key_cells(key: &Value) -> Result<Vec<&Cell>> {
    match key {
        Value::Table(t) => {
            require_single_column(t.width(), "order key")?;
            Ok(t.column_cells(0).collect())
        }
        Value::Groups(g) => {
            require_single_column(g.width(), "order key")?;
            g.rows()
                .iter()
                .map(|r| {
                    r[0].distinct_value()
                        .ok_or_else(|| AlgebraError::IncomparableCells {
                            left: r[0]
                                .members()
                                .iter()
                                .map(Cell::render)
                                .collect::<Vec<_>>()
                                .join(", "),
                            right: "group key".into(),
                        })
                })
                .collect()
        }
        Value::Bool(_) => Err(AlgebraError::TypeError(
            "cannot order by a boolean column".into(),
        )),
    }
}

/// Stable sort of `data` rows by `key`.
///
/// Ascending order puts numbers before texts and nulls last; descending is the
/// exact reverse. Equal keys keep their input order in both directions.
pub fn order_by(data: &Value, key: &Value, d: Direction) -> Result<Value> {
    let keys = key_cells(key)?;
    if keys.len() != data.num_rows() {
        return Err(rows_mismatch("order key", data.num_rows(), keys.len()));
    }
    let mut order: Vec<usize> = (0..keys.len()).collect();
    match d {
        Direction::Asc => order.sort_by(|a, b| sort_order(keys[*a], keys[*b])),
        Direction::Desc => order.sort_by(|a, b| sort_order(keys[*b], keys[*a])),
    }
    match data {
        Value::Table(t) => Ok(Value::Table(
            t.with_rows(order.iter().map(|r| t.rows()[*r].clone()).collect()),
        )),
        Value::Groups(g) => Ok(Value::Groups(
            g.with_rows(order.iter().map(|r| g.rows()[*r].clone()).collect()),
        )),
        Value::Bool(_) => Err(AlgebraError::TypeError(
            "cannot order a boolean column".into(),
        )),
    }
}

/// First `k` rows.
pub fn limit(v: &Value, k: usize) -> Result<Value> {
    match v {
        Value::Table(t) => Ok(Value::Table(
            t.with_rows(t.rows().iter().take(k).cloned().collect()),
        )),
        Value::Groups(g) => Ok(Value::Groups(
            g.with_rows(g.rows().iter().take(k).cloned().collect()),
        )),
        Value::Bool(_) => Err(AlgebraError::TypeError(
            "cannot limit a boolean column".into(),
        )),
    }
}

/// Renders a final value as an answer list.
///
/// A group renders as its distinct value when all members agree, otherwise as
/// its members joined in group order. Multi-column values flatten row-major.
pub fn to_answer(v: &Value) -> Vec<String> {
    match v {
        Value::Table(t) => t
            .rows()
            .iter()
            .flat_map(|r| r.iter().map(Cell::render))
            .collect(),
        Value::Groups(g) => g
            .rows()
            .iter()
            .flat_map(|r| {
                r.iter().map(|group| match group.distinct_value() {
                    Some(c) => c.render(),
                    None => group
                        .members()
                        .iter()
                        .map(Cell::render)
                        .collect::<Vec<_>>()
                        .join(", "),
                })
            })
            .collect(),
        Value::Bool(b) => b
            .bits()
            .iter()
            .map(|x| if *x { "t" } else { "f" }.to_string())
            .collect(),
    }
}
