//! Random tables and type-directed random graphs over them.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use tabalg::graph::{Graph, GraphBuilder, NodeId};
use tabalg::{AggFunc, ArithOp, Cell, Comparator, Direction, Operator, Table};

/// Text cells, several of them full of separator characters or keyword look-alikes.
const WORDS: &[&str] = &[
    "a",
    "b",
    "B",
    "c d",
    "x|y",
    "p, q",
    "n,,m",
    "it's",
    "N3",
    "t",
    "f",
    "limit",
    "[EMPTY]",
    "back\\slash",
    "||",
    " pad ",
];

pub const MAX_DEPTH: usize = 6;

pub fn random_cell(rng: &mut ChaCha8Rng) -> Cell {
    match rng.random_range(0..20) {
        0..=10 => Cell::from(rng.random_range(-5i64..20)),
        11 => Cell::number(Decimal::new(rng.random_range(-300i64..300), 1)),
        12..=17 => Cell::Text(WORDS.choose(rng).unwrap().to_string()),
        _ => Cell::Null,
    }
}

fn typed_cell(rng: &mut ChaCha8Rng, kind: u8) -> Cell {
    if rng.random_bool(0.08) {
        return Cell::Null;
    }
    match kind {
        0 => Cell::from(rng.random_range(-5i64..20)),
        1 => Cell::Text(WORDS.choose(rng).unwrap().to_string()),
        _ => random_cell(rng),
    }
}

/// A table of at most 8 rows and 5 columns named `c0`, `c1`, ...
///
/// Columns are mostly numeric or mostly text, with some mixed ones.
pub fn random_table(rng: &mut ChaCha8Rng) -> Table {
    let width = rng.random_range(1..=5);
    let rows = if rng.random_bool(0.05) {
        0
    } else {
        rng.random_range(1..=8)
    };
    sized_table(rng, rows, width)
}

pub fn sized_table(rng: &mut ChaCha8Rng, rows: usize, width: usize) -> Table {
    let kinds: Vec<u8> = (0..width)
        .map(|_| match rng.random_range(0..10) {
            0..=5 => 0,
            6..=8 => 1,
            _ => 2,
        })
        .collect();
    let header = (0..width).map(|c| format!("c{c}")).collect();
    let cells = (0..rows)
        .map(|_| kinds.iter().map(|k| typed_cell(rng, *k)).collect())
        .collect();
    Table::new(Some(header), cells).unwrap()
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    b: GraphBuilder,
    leaf: NodeId,
    width: usize,
    numeric: Vec<usize>,
}

const BINARY: [Comparator; 6] = [
    Comparator::Gt,
    Comparator::Lt,
    Comparator::Ge,
    Comparator::Le,
    Comparator::Eq,
    Comparator::Ne,
];

impl Gen<'_> {
    fn op(&mut self, op: Operator, children: Vec<NodeId>) -> NodeId {
        self.b.op(op, children).unwrap()
    }

    fn base(&mut self, mask: Option<NodeId>) -> NodeId {
        let c = self.rng.random_range(0..self.width);
        let p = self.op(Operator::Projection(vec![format!("c{c}")]), vec![self.leaf]);
        match mask {
            Some(m) => self.op(Operator::Selection, vec![p, m]),
            None => p,
        }
    }

    /// Like `base`, preferring a column without text.
    fn num_base(&mut self, mask: Option<NodeId>) -> NodeId {
        if self.numeric.is_empty() || self.rng.random_bool(0.1) {
            return self.base(mask);
        }
        let c = *self.numeric.choose(self.rng).unwrap();
        let p = self.op(Operator::Projection(vec![format!("c{c}")]), vec![self.leaf]);
        match mask {
            Some(m) => self.op(Operator::Selection, vec![p, m]),
            None => p,
        }
    }

    fn num_col(&mut self, mask: Option<NodeId>, d: usize) -> NodeId {
        if d <= 2 || self.rng.random_bool(0.5) {
            self.num_base(mask)
        } else {
            self.col(mask, d)
        }
    }

    /// Single-column table whose rows follow `mask` (or the whole table).
    fn col(&mut self, mask: Option<NodeId>, d: usize) -> NodeId {
        if d <= 2 || self.rng.random_bool(0.4) {
            return self.base(mask);
        }
        match self.rng.random_range(0..3) {
            0 => {
                let o = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]
                    .choose(self.rng)
                    .unwrap();
                let a = self.num_col(mask, d - 1);
                let b = if self.rng.random_bool(0.5) {
                    self.num_col(mask, d - 1)
                } else {
                    self.scalar(d - 1)
                };
                self.op(Operator::TermwiseOp(o), vec![a, b])
            }
            1 => {
                let data = self.col(mask, d - 1);
                let key = self.col(mask, d - 1);
                let dir = if self.rng.random_bool(0.5) {
                    Direction::Asc
                } else {
                    Direction::Desc
                };
                self.op(Operator::OrderBy(dir), vec![data, key])
            }
            _ => self.base(mask),
        }
    }

    fn literal(&mut self) -> NodeId {
        let c = random_cell(self.rng);
        self.b.value(Table::column(vec![c]))
    }

    /// Usually a single row.
    fn scalar(&mut self, d: usize) -> NodeId {
        if d <= 2 || self.rng.random_bool(0.35) {
            return self.literal();
        }
        let mask = self.space(d - 1);
        let inner = self.num_col(mask, d - 1);
        if self.rng.random_bool(0.8) {
            let f = *AggFunc::ALL.choose(self.rng).unwrap();
            self.op(Operator::Aggregation(f), vec![inner])
        } else {
            self.op(Operator::Limit(1), vec![inner])
        }
    }

    fn list(&mut self) -> Vec<Cell> {
        let n = self.rng.random_range(1..=3);
        (0..n)
            .map(|_| loop {
                let c = random_cell(self.rng);
                if !c.is_null() {
                    break c;
                }
            })
            .collect()
    }

    fn mask(&mut self, space: Option<NodeId>, d: usize) -> NodeId {
        let d = d.max(2);
        match self.rng.random_range(0..10) {
            0..=4 => {
                let cmp = BINARY.choose(self.rng).unwrap().clone();
                let a = self.col(space, d - 1);
                let b = if self.rng.random_bool(0.6) {
                    self.scalar(d - 1)
                } else {
                    self.col(space, d - 1)
                };
                self.op(Operator::Comparison(cmp), vec![a, b])
            }
            5 | 6 => {
                let list = self.list();
                let cmp = if self.rng.random_bool(0.5) {
                    Comparator::In(list)
                } else {
                    Comparator::NotIn(list)
                };
                let a = self.col(space, d - 1);
                self.op(Operator::Comparison(cmp), vec![a])
            }
            7 => {
                let cmp = if self.rng.random_bool(0.5) {
                    Comparator::IsNull
                } else {
                    Comparator::IsNotNull
                };
                let a = self.col(space, d - 1);
                self.op(Operator::Comparison(cmp), vec![a])
            }
            _ if d > 3 => {
                let cmp = if self.rng.random_bool(0.5) {
                    Comparator::And
                } else {
                    Comparator::Or
                };
                let a = self.mask(space, d - 1);
                let b = self.mask(space, d - 1);
                self.op(Operator::Comparison(cmp), vec![a, b])
            }
            _ => {
                let a = self.col(space, d - 1);
                self.op(Operator::Comparison(Comparator::IsNotNull), vec![a])
            }
        }
    }

    /// Either the whole table or the rows kept by a mask over it.
    fn space(&mut self, d: usize) -> Option<NodeId> {
        if d <= 3 || self.rng.random_bool(0.5) {
            None
        } else {
            Some(self.mask(None, d - 1))
        }
    }

    fn keys(&mut self, space: Option<NodeId>) -> Vec<NodeId> {
        let n = if self.rng.random_bool(0.8) { 1 } else { 2 };
        (0..n).map(|_| self.base(space)).collect()
    }

    fn grouped(&mut self, keys: &[NodeId], data: NodeId) -> NodeId {
        let mut children = keys.to_vec();
        children.push(data);
        self.op(Operator::GroupBy { keys: keys.len() }, children)
    }

    fn groups(&mut self, d: usize) -> (NodeId, Vec<NodeId>, Option<NodeId>) {
        let space = self.space(d - 1);
        let keys = self.keys(space);
        let data = if self.rng.random_bool(0.3) {
            let a = self.rng.random_range(0..self.width);
            let b = self.rng.random_range(0..self.width);
            let p = self.op(
                Operator::Projection(vec![format!("c{a}"), format!("c{b}")]),
                vec![self.leaf],
            );
            match space {
                Some(m) => self.op(Operator::Selection, vec![p, m]),
                None => p,
            }
        } else {
            self.col(space, d - 1)
        };
        let mut g = self.grouped(&keys, data);
        if d > 4 && self.rng.random_bool(0.3) {
            let inner = self.num_base(space);
            let per = self.grouped(&keys, inner);
            let f = *AggFunc::ALL.choose(self.rng).unwrap();
            let agg = self.op(Operator::Aggregation(f), vec![per]);
            let cmp = BINARY.choose(self.rng).unwrap().clone();
            let rhs = self.literal();
            let hmask = self.op(Operator::Comparison(cmp), vec![agg, rhs]);
            g = self.op(Operator::Having, vec![g, hmask]);
        }
        (g, keys, space)
    }

    fn any(&mut self) -> NodeId {
        let nodes = self.b.len();
        self.rng.random_range(0..nodes)
    }

    fn root(&mut self, d: usize) -> NodeId {
        match self.rng.random_range(0..20) {
            0..=3 => {
                let s = self.space(d);
                self.col(s, d)
            }
            4 | 5 => self.scalar(d),
            6 | 7 => {
                let s = self.space(d);
                self.mask(s, d)
            }
            8 | 9 => self.groups(d).0,
            10 | 11 => {
                let (g, _, _) = self.groups(d - 1);
                let f = *AggFunc::ALL.choose(self.rng).unwrap();
                self.op(Operator::Aggregation(f), vec![g])
            }
            12 | 13 => {
                // group table ordered by a per-group count, then cut
                let (g, keys, space) = self.groups(d - 2);
                let inner = self.num_base(space);
                let per = self.grouped(&keys, inner);
                let f = *AggFunc::ALL.choose(self.rng).unwrap();
                let agg = self.op(Operator::Aggregation(f), vec![per]);
                let ob = self.op(Operator::OrderBy(Direction::Desc), vec![g, agg]);
                let k = self.rng.random_range(1..=3);
                self.op(Operator::Limit(k), vec![ob])
            }
            14 => {
                let (g, _, _) = self.groups(d - 1);
                let rhs = self.literal();
                let cmp = BINARY.choose(self.rng).unwrap().clone();
                self.op(Operator::Comparison(cmp), vec![g, rhs])
            }
            15 => {
                let inner = self.root(d - 1);
                let k = self.rng.random_range(1..=4);
                self.op(Operator::Limit(k), vec![inner])
            }
            16 => {
                // masks from an unrelated row space: usually a shape error
                let s = self.space(d - 1);
                let a = self.col(s, d - 1);
                let m = self.mask(None, d - 2);
                self.op(Operator::Selection, vec![a, m])
            }
            _ => {
                // arbitrary wiring of existing nodes
                let _ = self.col(None, d - 1);
                let _ = self.mask(None, d - 1);
                let a = self.any();
                let b = self.any();
                let op = match self.rng.random_range(0..5) {
                    0 => Operator::Selection,
                    1 => Operator::Having,
                    2 => Operator::TermwiseOp(ArithOp::Add),
                    3 => Operator::OrderBy(Direction::Asc),
                    _ => Operator::Comparison(Comparator::And),
                };
                self.op(op, vec![a, b])
            }
        }
    }
}

/// Longest chain of operators from the root to a leaf.
pub fn depth(g: &Graph) -> usize {
    let mut d = vec![0usize; g.len()];
    for (i, n) in g.nodes().iter().enumerate() {
        if n.operator().is_some() {
            d[i] = 1 + n.children.iter().map(|c| d[*c]).max().unwrap_or(0);
        }
    }
    d[g.root()]
}

/// A random graph of depth at most [`MAX_DEPTH`] over a random table.
pub fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    graph_over(rng, random_table)
}

fn graph_over(rng: &mut ChaCha8Rng, table: fn(&mut ChaCha8Rng) -> Table) -> Graph {
    loop {
        let table = table(rng);
        let width = table.width();
        let numeric = (0..width)
            .filter(|c| table.column_cells(*c).all(|x| !matches!(x, Cell::Text(_))))
            .collect();
        let mut b = GraphBuilder::new();
        let leaf = b.value(table);
        let mut gen = Gen {
            rng,
            b,
            leaf,
            width,
            numeric,
        };
        let root = gen.root(MAX_DEPTH);
        let g = gen.b.finish(root).unwrap();
        if depth(&g) <= MAX_DEPTH && depth(&g) > 0 {
            return g;
        }
    }
}

/// `n` graphs from a fixed seed.
pub fn corpus(seed: u64, n: usize) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_graph(&mut rng)).collect()
}

/// `n` graphs over full 8x5 tables.
pub fn full_size_corpus(seed: u64, n: usize) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| graph_over(&mut rng, |r| sized_table(r, 8, 5)))
        .collect()
}
