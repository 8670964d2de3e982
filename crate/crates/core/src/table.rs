//! Tables, group tables and boolean columns.

use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::cell::{cells_equal, parse_cell, Cell};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum TableError {
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("header has {header} names but rows have {width} cells")]
    HeaderWidth { header: usize, width: usize },
    #[error("a non-empty table needs at least one column")]
    NoColumns,
    #[error("row {row}: groups must be non-empty and of equal size across columns")]
    UnevenGroups { row: usize },
    #[error("failed to read table: {0}")]
    Io(String),
}

impl TableError {
    pub fn code(&self) -> &'static str {
        match self {
            TableError::Io(_) => "IoError",
            _ => "TableError",
        }
    }
}

fn check_shape<T>(
    header: Option<&[String]>,
    width: usize,
    rows: &[Vec<T>],
) -> Result<(), TableError> {
    if let Some(h) = header {
        if h.len() != width {
            return Err(TableError::HeaderWidth {
                header: h.len(),
                width,
            });
        }
    }
    if !rows.is_empty() && width == 0 {
        return Err(TableError::NoColumns);
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(TableError::RaggedRow {
                row: i,
                expected: width,
                found: row.len(),
            });
        }
    }
    Ok(())
}

fn synthetic_names(width: usize) -> Vec<String> {
    (1..=width).map(|i| i.to_string()).collect()
}

/// An ordered matrix of cells with an optional header.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table {
    header: Option<Vec<String>>,
    width: usize,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Builds a table; the width comes from the header, else from the first row.
    pub fn new(header: Option<Vec<String>>, rows: Vec<Vec<Cell>>) -> Result<Table, TableError> {
        let width = header
            .as_ref()
            .map(Vec::len)
            .or_else(|| rows.first().map(Vec::len))
            .unwrap_or(0);
        Table::with_width(header, width, rows)
    }

    pub fn with_width(
        header: Option<Vec<String>>,
        width: usize,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Table, TableError> {
        check_shape(header.as_deref(), width, &rows)?;
        Ok(Table {
            header,
            width,
            rows,
        })
    }

    /// Single-column headerless table.
    pub fn column(cells: Vec<Cell>) -> Table {
        Table {
            header: None,
            width: 1,
            rows: cells.into_iter().map(|c| vec![c]).collect(),
        }
    }

    pub fn named_column(name: &str, cells: Vec<Cell>) -> Table {
        Table {
            header: Some(vec![name.to_string()]),
            ..Table::column(cells)
        }
    }

    pub fn header(&self) -> Option<&[String]> {
        self.header.as_deref()
    }

    /// Column names, synthesizing 1-based indices when there is no header.
    pub fn column_names(&self) -> Vec<String> {
        self.header
            .clone()
            .unwrap_or_else(|| synthetic_names(self.width))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        match &self.header {
            Some(h) => h
                .iter()
                .position(|c| c == name)
                .or_else(|| h.iter().position(|c| c.eq_ignore_ascii_case(name))),
            None => name
                .parse::<usize>()
                .ok()
                .filter(|i| (1..=self.width).contains(i))
                .map(|i| i - 1),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<Cell>> {
        self.rows
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    pub fn column_cells(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    pub fn without_header(mut self) -> Table {
        self.header = None;
        self
    }

    /// Same header and width, different rows (rows must already be well-shaped).
    pub(crate) fn with_rows(&self, rows: Vec<Vec<Cell>>) -> Table {
        debug_assert!(rows.iter().all(|r| r.len() == self.width));
        Table {
            header: self.header.clone(),
            width: self.width,
            rows,
        }
    }

    /// Parses delimited text whose first record is the header.
    pub fn from_delimited<R: Read>(reader: R, delimiter: u8) -> Result<Table, TableError> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .quoting(delimiter != b'\t')
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| TableError::Io(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| TableError::Io(e.to_string()))?;
            rows.push(record.iter().map(parse_cell).collect());
        }
        Table::new(Some(header), rows)
    }

    pub fn load(path: &Path, delimiter: u8) -> Result<Table, TableError> {
        let file = std::fs::File::open(path)
            .map_err(|e| TableError::Io(format!("{}: {e}", path.display())))?;
        Table::from_delimited(file, delimiter)
    }

    /// Writes the table as delimited text with a header line. Nulls are empty fields.
    pub fn to_delimited(&self, delimiter: u8) -> String {
        let sep = (delimiter as char).to_string();
        let mut out = self.column_names().join(&sep);
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(&sep));
            out.push('\n');
        }
        out
    }
}

/// An ordered multiset of cells: one group-table component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellGroup(pub Vec<Cell>);

impl CellGroup {
    pub fn members(&self) -> &[Cell] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The group's value when all members are equal under cell comparison.
    pub fn distinct_value(&self) -> Option<&Cell> {
        let first = self.0.first()?;
        self.0
            .iter()
            .all(|c| cells_equal(c, first))
            .then_some(first)
    }
}

/// A matrix whose components are groups of cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupTable {
    header: Option<Vec<String>>,
    width: usize,
    rows: Vec<Vec<CellGroup>>,
}

impl GroupTable {
    pub fn new(
        header: Option<Vec<String>>,
        width: usize,
        rows: Vec<Vec<CellGroup>>,
    ) -> Result<GroupTable, TableError> {
        check_shape(header.as_deref(), width, &rows)?;
        for (i, row) in rows.iter().enumerate() {
            let n = row.first().map(CellGroup::len).unwrap_or(0);
            if n == 0 || row.iter().any(|g| g.len() != n) {
                return Err(TableError::UnevenGroups { row: i });
            }
        }
        Ok(GroupTable {
            header,
            width,
            rows,
        })
    }

    pub fn column(groups: Vec<CellGroup>) -> Result<GroupTable, TableError> {
        GroupTable::new(None, 1, groups.into_iter().map(|g| vec![g]).collect())
    }

    pub fn header(&self) -> Option<&[String]> {
        self.header.as_deref()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.header
            .clone()
            .unwrap_or_else(|| synthetic_names(self.width))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<CellGroup>] {
        &self.rows
    }

    pub fn without_header(mut self) -> GroupTable {
        self.header = None;
        self
    }

    pub(crate) fn with_rows(&self, rows: Vec<Vec<CellGroup>>) -> GroupTable {
        GroupTable {
            header: self.header.clone(),
            width: self.width,
            rows,
        }
    }
}

/// A single boolean column used as a row filter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BoolColumn {
    bits: Vec<bool>,
}

impl BoolColumn {
    pub fn new(bits: Vec<bool>) -> BoolColumn {
        BoolColumn { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

impl FromIterator<bool> for BoolColumn {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BoolColumn::new(iter.into_iter().collect())
    }
}
