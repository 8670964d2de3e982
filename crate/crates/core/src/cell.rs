//! Atomic cell values.
//!
//! Web tables mix numbers and free text in the same column, so a [`Cell`] is
//! typed per value rather than per column. Numbers are exact decimals: the
//! same aggregation over the same table renders to the same bytes on every
//! machine.

use std::cmp::Ordering;
use std::fmt;

use rust_decimal::Decimal;

/// A single table value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Number(Decimal),
    Text(String),
    Null,
}

impl Cell {
    /// Builds a number cell in canonical form (no trailing zeros, no negative zero).
    pub fn number(value: Decimal) -> Cell {
        Cell::Number(canonical_decimal(value))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            Cell::Number(d) => Some(*d),
            _ => None,
        }
    }

    /// Rendering used on disk and in answers. Null renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            Cell::Number(d) => canonical_decimal(*d).to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    /// Rank of the value class in the total order used for sorting.
    fn class_rank(&self) -> u8 {
        match self {
            Cell::Number(_) => 0,
            Cell::Text(_) => 1,
            Cell::Null => 2,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::number(Decimal::from(v))
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        parse_cell(s)
    }
}

pub fn canonical_decimal(value: Decimal) -> Decimal {
    let n = value.normalize();
    if n.is_zero() {
        Decimal::ZERO
    } else {
        n
    }
}

/// Parses raw cell text.
///
/// The whole trimmed text must match the decimal grammar (optional sign,
/// digits with optional `,` thousands grouping, optional `.` fraction) to
/// become a number. Empty or whitespace-only input is `Null`.
pub fn parse_cell(text: &str) -> Cell {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Cell::Null;
    }
    match parse_decimal(trimmed) {
        Some(d) => Cell::number(d),
        None => Cell::Text(trimmed.to_string()),
    }
}

/// Decimal grammar shared by cell parsing and unit stripping.
pub fn parse_decimal(s: &str) -> Option<Decimal> {
    let (negative, body) = match s.as_bytes().first()? {
        b'+' => (false, &s[1..]),
        b'-' => (true, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    if int_part.is_empty() && frac_part.is_none() {
        return None;
    }
    let digits = if int_part.contains(',') {
        let mut groups = int_part.split(',');
        let head = groups.next()?;
        if head.is_empty() || head.len() > 3 || !head.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut joined = head.to_string();
        for g in groups {
            if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            joined.push_str(g);
        }
        joined
    } else {
        if !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        int_part.to_string()
    };
    let mut plain = String::with_capacity(digits.len() + 4);
    if negative {
        plain.push('-');
    }
    plain.push_str(if digits.is_empty() { "0" } else { &digits });
    if let Some(f) = frac_part {
        plain.push('.');
        plain.push_str(f);
    }
    Decimal::from_str_exact(&plain).ok()
}

/// Compares two cells; `None` means the pair is incomparable.
///
/// Numbers compare numerically, texts by the bytes of their lower-cased form,
/// and `Null` is equal only to `Null`.
pub fn compare_cells(a: &Cell, b: &Cell) -> Option<Ordering> {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => Some(x.cmp(y)),
        (Cell::Text(x), Cell::Text(y)) => Some(x.to_lowercase().cmp(&y.to_lowercase())),
        (Cell::Null, Cell::Null) => Some(Ordering::Equal),
        _ => None,
    }
}

/// Total order for sorting and grouping: numbers, then texts, then nulls.
pub fn sort_order(a: &Cell, b: &Cell) -> Ordering {
    compare_cells(a, b).unwrap_or_else(|| a.class_rank().cmp(&b.class_rank()))
}

pub fn cells_equal(a: &Cell, b: &Cell) -> bool {
    compare_cells(a, b) == Some(Ordering::Equal)
}
