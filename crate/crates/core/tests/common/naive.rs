//! Reference interpreter: walks the graph from the root, re-evaluating shared
//! subtrees every time, over plain vectors. It shares no evaluation code with
//! the library; library types appear only at the boundary.

use std::cmp::Ordering;

use rust_decimal::{Decimal, RoundingStrategy};

use tabalg::graph::{Graph, NodeId, Payload};
use tabalg::{
    AggFunc, ArithOp, BoolColumn, Cell, CellGroup, Comparator, Direction, GroupTable, Operator,
    Table, Value,
};

#[derive(Debug, Clone)]
enum V {
    T {
        header: Option<Vec<String>>,
        width: usize,
        rows: Vec<Vec<Cell>>,
    },
    G {
        header: Option<Vec<String>>,
        width: usize,
        rows: Vec<Vec<Vec<Cell>>>,
    },
    B(Vec<bool>),
}

type R<T> = Result<T, &'static str>;
type TableParts<'a> = (&'a Option<Vec<String>>, usize, &'a Vec<Vec<Cell>>);

fn lift(v: &Value) -> V {
    match v {
        Value::Table(t) => V::T {
            header: t.header().map(<[String]>::to_vec),
            width: t.width(),
            rows: t.rows().to_vec(),
        },
        Value::Groups(g) => V::G {
            header: g.header().map(<[String]>::to_vec),
            width: g.width(),
            rows: g
                .rows()
                .iter()
                .map(|r| r.iter().map(|c| c.members().to_vec()).collect())
                .collect(),
        },
        Value::Bool(b) => V::B(b.bits().to_vec()),
    }
}

fn lower(v: V) -> Value {
    match v {
        V::T {
            header,
            width,
            rows,
        } => Value::Table(Table::with_width(header, width, rows).unwrap()),
        V::G {
            header,
            width,
            rows,
        } => Value::Groups(
            GroupTable::new(
                header,
                width,
                rows.into_iter()
                    .map(|r| r.into_iter().map(CellGroup).collect())
                    .collect(),
            )
            .unwrap(),
        ),
        V::B(b) => Value::Bool(BoolColumn::new(b)),
    }
}

fn num(d: Decimal) -> Cell {
    let n = d.normalize();
    Cell::Number(if n.is_zero() { Decimal::ZERO } else { n })
}

fn cmp_cells(a: &Cell, b: &Cell) -> Option<Ordering> {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => Some(x.cmp(y)),
        (Cell::Text(x), Cell::Text(y)) => Some(x.to_lowercase().cmp(&y.to_lowercase())),
        (Cell::Null, Cell::Null) => Some(Ordering::Equal),
        _ => None,
    }
}

fn rank(c: &Cell) -> u8 {
    match c {
        Cell::Number(_) => 0,
        Cell::Text(_) => 1,
        Cell::Null => 2,
    }
}

fn total(a: &Cell, b: &Cell) -> Ordering {
    cmp_cells(a, b).unwrap_or_else(|| rank(a).cmp(&rank(b)))
}

fn same(a: &Cell, b: &Cell) -> bool {
    cmp_cells(a, b) == Some(Ordering::Equal)
}

fn distinct(g: &[Cell]) -> Option<&Cell> {
    let first = g.first()?;
    g.iter().all(|c| same(c, first)).then_some(first)
}

fn rows_of(v: &V) -> usize {
    match v {
        V::T { rows, .. } => rows.len(),
        V::G { rows, .. } => rows.len(),
        V::B(b) => b.len(),
    }
}

fn table(v: &V) -> R<TableParts<'_>> {
    match v {
        V::T {
            header,
            width,
            rows,
        } => Ok((header, *width, rows)),
        _ => Err("TypeError"),
    }
}

fn bools(v: &V) -> R<&Vec<bool>> {
    match v {
        V::B(b) => Ok(b),
        _ => Err("TypeError"),
    }
}

fn one_col(width: usize) -> R<()> {
    if width == 1 {
        Ok(())
    } else {
        Err("ShapeMismatch")
    }
}

/// Left operand cells of a comparison.
fn lhs_cells(v: &V) -> R<Vec<Cell>> {
    match v {
        V::T { width, rows, .. } => {
            one_col(*width)?;
            Ok(rows.iter().map(|r| r[0].clone()).collect())
        }
        V::G { width, rows, .. } => {
            one_col(*width)?;
            rows.iter()
                .map(|r| distinct(&r[0]).cloned().ok_or("AmbiguousGroup"))
                .collect()
        }
        V::B(_) => Err("TypeError"),
    }
}

fn pair_index(n: usize, m: usize) -> R<bool> {
    // true when the second operand is broadcast
    if n == m {
        Ok(false)
    } else if m == 1 {
        Ok(true)
    } else {
        Err("ShapeMismatch")
    }
}

fn compare(cmp: &Comparator, args: &[V]) -> R<Vec<bool>> {
    match cmp {
        Comparator::And | Comparator::Or => {
            let a = bools(&args[0])?;
            let b = bools(&args[1])?;
            let bc = pair_index(a.len(), b.len())?;
            Ok((0..a.len())
                .map(|r| {
                    let y = b[if bc { 0 } else { r }];
                    if matches!(cmp, Comparator::And) {
                        a[r] && y
                    } else {
                        a[r] || y
                    }
                })
                .collect())
        }
        Comparator::In(list) | Comparator::NotIn(list) => {
            let neg = matches!(cmp, Comparator::NotIn(_));
            let member = |c: &Cell| list.iter().any(|l| same(c, l));
            let hits: Vec<bool> = match &args[0] {
                V::G { width, rows, .. } => {
                    one_col(*width)?;
                    rows.iter().map(|r| r[0].iter().all(member)).collect()
                }
                other => lhs_cells(other)?.iter().map(member).collect(),
            };
            Ok(hits.into_iter().map(|h| h != neg).collect())
        }
        Comparator::IsNull | Comparator::IsNotNull => {
            let want = matches!(cmp, Comparator::IsNull);
            Ok(lhs_cells(&args[0])?
                .iter()
                .map(|c| c.is_null() == want)
                .collect())
        }
        _ => {
            let left = lhs_cells(&args[0])?;
            let (_, w, rrows) = table(&args[1])?;
            one_col(w)?;
            let bc = pair_index(left.len(), rrows.len())?;
            let mut out = Vec::new();
            for (r, a) in left.iter().enumerate() {
                let b = &rrows[if bc { 0 } else { r }][0];
                let o = cmp_cells(a, b);
                out.push(match cmp {
                    Comparator::Eq => o == Some(Ordering::Equal),
                    Comparator::Ne => o != Some(Ordering::Equal),
                    _ => {
                        let o = o.ok_or("IncomparableCells")?;
                        match cmp {
                            Comparator::Gt => o == Ordering::Greater,
                            Comparator::Lt => o == Ordering::Less,
                            Comparator::Ge => o != Ordering::Less,
                            _ => o != Ordering::Greater,
                        }
                    }
                });
            }
            Ok(out)
        }
    }
}

fn column_index(header: &Option<Vec<String>>, width: usize, name: &str) -> Option<usize> {
    match header {
        Some(h) => h
            .iter()
            .position(|c| c == name)
            .or_else(|| h.iter().position(|c| c.eq_ignore_ascii_case(name))),
        None => name
            .parse::<usize>()
            .ok()
            .filter(|i| *i >= 1 && *i <= width)
            .map(|i| i - 1),
    }
}

fn round(d: Decimal) -> Decimal {
    d.round_dp_with_strategy(10, RoundingStrategy::MidpointNearestEven)
}

fn agg(cells: &[Cell], f: AggFunc) -> R<Cell> {
    let present: Vec<&Cell> = cells.iter().filter(|c| !c.is_null()).collect();
    if f == AggFunc::Count {
        return Ok(Cell::from(present.len() as i64));
    }
    let mut xs = Vec::new();
    for c in present {
        match c {
            Cell::Number(d) => xs.push(*d),
            _ => return Err("TypeError"),
        }
    }
    let sum = || -> R<Decimal> {
        let mut s = Decimal::ZERO;
        for x in &xs {
            s = s.checked_add(*x).ok_or("ArithmeticOverflow")?;
        }
        Ok(s)
    };
    Ok(num(match f {
        AggFunc::Sum => sum()?,
        AggFunc::Avg => {
            if xs.is_empty() {
                return Err("EmptyInput");
            }
            round(
                sum()?
                    .checked_div(Decimal::from(xs.len()))
                    .ok_or("ArithmeticOverflow")?,
            )
        }
        AggFunc::Min => *xs.iter().min().ok_or("EmptyInput")?,
        AggFunc::Max => *xs.iter().max().ok_or("EmptyInput")?,
        AggFunc::Count => unreachable!(),
    }))
}

fn column(cells: Vec<Cell>) -> V {
    V::T {
        header: None,
        width: 1,
        rows: cells.into_iter().map(|c| vec![c]).collect(),
    }
}

fn apply(op: &Operator, args: Vec<V>) -> R<V> {
    match op {
        Operator::Projection(cols) => {
            let (header, width, rows) = table(&args[0])?;
            let mut idx = Vec::new();
            for c in cols {
                idx.push(column_index(header, width, c).ok_or("UnknownColumn")?);
            }
            Ok(V::T {
                header: Some(cols.clone()),
                width: cols.len(),
                rows: rows
                    .iter()
                    .map(|r| idx.iter().map(|i| r[*i].clone()).collect())
                    .collect(),
            })
        }
        Operator::Comparison(c) => Ok(V::B(compare(c, &args)?)),
        Operator::Selection => {
            let (header, width, rows) = table(&args[0])?;
            let m = bools(&args[1])?;
            if m.len() != rows.len() {
                return Err("ShapeMismatch");
            }
            Ok(V::T {
                header: header.clone(),
                width,
                rows: rows
                    .iter()
                    .zip(m)
                    .filter(|(_, k)| **k)
                    .map(|(r, _)| r.clone())
                    .collect(),
            })
        }
        Operator::Having => {
            let V::G {
                header,
                width,
                rows,
            } = &args[0]
            else {
                return Err("TypeError");
            };
            let m = bools(&args[1])?;
            if m.len() != rows.len() {
                return Err("ShapeMismatch");
            }
            Ok(V::G {
                header: header.clone(),
                width: *width,
                rows: rows
                    .iter()
                    .zip(m)
                    .filter(|(_, k)| **k)
                    .map(|(r, _)| r.clone())
                    .collect(),
            })
        }
        Operator::GroupBy { keys } => {
            let mut key_cols = Vec::new();
            for k in &args[..*keys] {
                key_cols.push(table(k)?);
            }
            let (header, width, rows) = table(&args[*keys])?;
            for (_, w, kr) in &key_cols {
                one_col(*w)?;
                if kr.len() != rows.len() {
                    return Err("ShapeMismatch");
                }
            }
            let key_of =
                |r: usize| -> Vec<&Cell> { key_cols.iter().map(|(_, _, kr)| &kr[r][0]).collect() };
            let tuple_cmp = |a: &[&Cell], b: &[&Cell]| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| total(x, y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            };
            // selection-style: repeatedly pick the smallest remaining key
            let mut left: Vec<usize> = (0..rows.len()).collect();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            while !left.is_empty() {
                let mut best = left[0];
                for &r in &left {
                    if tuple_cmp(&key_of(r), &key_of(best)) == Ordering::Less {
                        best = r;
                    }
                }
                let members: Vec<usize> = left
                    .iter()
                    .copied()
                    .filter(|r| tuple_cmp(&key_of(*r), &key_of(best)) == Ordering::Equal)
                    .collect();
                left.retain(|r| !members.contains(r));
                groups.push(members);
            }
            Ok(V::G {
                header: header.clone(),
                width,
                rows: groups
                    .iter()
                    .map(|m| {
                        (0..width)
                            .map(|c| m.iter().map(|r| rows[*r][c].clone()).collect())
                            .collect()
                    })
                    .collect(),
            })
        }
        Operator::Aggregation(f) => match &args[0] {
            V::T { width, rows, .. } => {
                one_col(*width)?;
                let cells: Vec<Cell> = rows.iter().map(|r| r[0].clone()).collect();
                Ok(column(vec![agg(&cells, *f)?]))
            }
            V::G { width, rows, .. } => {
                one_col(*width)?;
                let mut out = Vec::new();
                for r in rows {
                    out.push(agg(&r[0], *f)?);
                }
                Ok(column(out))
            }
            V::B(_) => Err("TypeError"),
        },
        Operator::TermwiseOp(o) => {
            let (_, wa, ra) = table(&args[0])?;
            let (_, wb, rb) = table(&args[1])?;
            one_col(wa)?;
            one_col(wb)?;
            let n = if ra.len() == rb.len() {
                ra.len()
            } else if ra.len() == 1 {
                rb.len()
            } else if rb.len() == 1 {
                ra.len()
            } else {
                return Err("ShapeMismatch");
            };
            let mut out = Vec::new();
            for r in 0..n {
                let x = &ra[if ra.len() == 1 { 0 } else { r }][0];
                let y = &rb[if rb.len() == 1 { 0 } else { r }][0];
                let (Cell::Number(x), Cell::Number(y)) = (x, y) else {
                    return Err("TypeError");
                };
                let v = match o {
                    ArithOp::Add => x.checked_add(*y),
                    ArithOp::Sub => x.checked_sub(*y),
                    ArithOp::Mul => x.checked_mul(*y),
                    ArithOp::Div => {
                        if y.is_zero() {
                            return Err("DivisionByZero");
                        }
                        x.checked_div(*y).map(round)
                    }
                };
                out.push(num(v.ok_or("ArithmeticOverflow")?));
            }
            Ok(column(out))
        }
        Operator::OrderBy(d) => {
            let keys: Vec<Cell> = match &args[1] {
                V::T { width, rows, .. } => {
                    one_col(*width)?;
                    rows.iter().map(|r| r[0].clone()).collect()
                }
                V::G { width, rows, .. } => {
                    one_col(*width)?;
                    rows.iter()
                        .map(|r| distinct(&r[0]).cloned().ok_or("IncomparableCells"))
                        .collect::<R<_>>()?
                }
                V::B(_) => return Err("TypeError"),
            };
            if keys.len() != rows_of(&args[0]) {
                return Err("ShapeMismatch");
            }
            // insertion sort: stable by construction
            let mut order: Vec<usize> = Vec::new();
            for i in 0..keys.len() {
                let before = |j: usize| match d {
                    Direction::Asc => total(&keys[i], &keys[j]) == Ordering::Less,
                    Direction::Desc => total(&keys[i], &keys[j]) == Ordering::Greater,
                };
                let pos = order.iter().position(|j| before(*j)).unwrap_or(order.len());
                order.insert(pos, i);
            }
            match &args[0] {
                V::T {
                    header,
                    width,
                    rows,
                } => Ok(V::T {
                    header: header.clone(),
                    width: *width,
                    rows: order.iter().map(|r| rows[*r].clone()).collect(),
                }),
                V::G {
                    header,
                    width,
                    rows,
                } => Ok(V::G {
                    header: header.clone(),
                    width: *width,
                    rows: order.iter().map(|r| rows[*r].clone()).collect(),
                }),
                V::B(_) => Err("TypeError"),
            }
        }
        Operator::Limit(k) => match &args[0] {
            V::T {
                header,
                width,
                rows,
            } => Ok(V::T {
                header: header.clone(),
                width: *width,
                rows: rows.iter().take(*k).cloned().collect(),
            }),
            V::G {
                header,
                width,
                rows,
            } => Ok(V::G {
                header: header.clone(),
                width: *width,
                rows: rows.iter().take(*k).cloned().collect(),
            }),
            V::B(_) => Err("TypeError"),
        },
    }
}

fn strip(v: V) -> V {
    match v {
        V::T { width, rows, .. } => V::T {
            header: None,
            width,
            rows,
        },
        V::G { width, rows, .. } => V::G {
            header: None,
            width,
            rows,
        },
        b => b,
    }
}

fn eval(g: &Graph, id: NodeId) -> R<V> {
    let node = g.node(id);
    match &node.payload {
        Payload::Value(v) => Ok(lift(v)),
        Payload::Op(op) => {
            let mut args = Vec::new();
            for c in &node.children {
                args.push(eval(g, *c)?);
            }
            apply(op, args).map(strip)
        }
    }
}

/// Value of the root, or the error code of the first failure in evaluation order.
pub fn execute(g: &Graph) -> Result<Value, &'static str> {
    eval(g, g.root()).map(lower)
}
