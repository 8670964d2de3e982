//! Executable table algebra for table question answering.
//!
//! SQL queries compile to computational graphs of nine table operators. Graphs
//! can be partially executed at a chosen operator level, linearized into
//! training targets, parsed back, and executed to produce final answers.

pub mod algebra;
pub mod bindings;
pub mod cell;
pub mod eval;
pub mod graph;
pub mod linearize;
pub mod pipeline;
pub mod sql;
pub mod table;

pub use algebra::{
    AggFunc, AlgebraError, ArithOp, Comparator, Direction, Operator, OperatorKind, Value,
};
pub use cell::{parse_cell, Cell};
pub use table::{BoolColumn, CellGroup, GroupTable, Table, TableError};
