use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cell::{canonical_decimal, parse_decimal};

/// Lower-cases and collapses whitespace.
pub fn normalize_value(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Units removed before flexible comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitLexicon {
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
}

impl Default for UnitLexicon {
    fn default() -> Self {
        UnitLexicon {
            prefixes: ["$", "€", "£"].map(String::from).to_vec(),
            suffixes: ["years", "year", "kg", "km", "m", "%", "lbs", "pts"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl UnitLexicon {
    /// Reads a lexicon from JSON (`{"prefixes": [..], "suffixes": [..]}`).
    pub fn load(path: &Path) -> Result<UnitLexicon, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Rewrites `[prefix] number [suffix]` as the canonical number; anything
    /// else comes back trimmed but otherwise unchanged.
    pub fn strip(&self, s: &str) -> String {
        let t = s.trim();
        self.strip_number(t).unwrap_or_else(|| t.to_string())
    }

    fn strip_number(&self, t: &str) -> Option<String> {
        let mut body = t;
        if let Some(p) = self
            .prefixes
            .iter()
            .filter(|p| !p.is_empty() && body.starts_with(p.as_str()))
            .max_by_key(|p| p.len())
        {
            body = body[p.len()..].trim_start();
        }
        let num_len = body
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, ',' | '.' | '+' | '-')))
            .unwrap_or(body.len());
        let value = parse_decimal(&body[..num_len])?;
        let suffix = body[num_len..].trim();
        let known =
            suffix.is_empty() || self.suffixes.iter().any(|u| u.eq_ignore_ascii_case(suffix));
        known.then(|| canonical_decimal(value).to_string())
    }
}

/// Denotation comparison settings.
#[derive(Debug, Clone, Default)]
pub struct Evaluator {
    pub lexicon: UnitLexicon,
    /// Compare as sets (duplicates ignored) instead of multisets.
    pub set_equality: bool,
}

impl Evaluator {
    fn bag(&self, values: impl Iterator<Item = String>) -> BTreeMap<String, usize> {
        let mut bag = BTreeMap::new();
        for v in values {
            let n = bag.entry(normalize_value(&v)).or_insert(0);
            if !self.set_equality || *n == 0 {
                *n += 1;
            }
        }
        bag
    }

    /// Order-insensitive equality of normalized values.
    pub fn strict(&self, pred: &[String], gold: &[String]) -> bool {
        self.bag(pred.iter().cloned()) == self.bag(gold.iter().cloned())
    }

    /// Strict equality after removing units on both sides.
    pub fn flexible(&self, pred: &[String], gold: &[String]) -> bool {
        let strip = |v: &[String]| self.bag(v.iter().map(|s| self.lexicon.strip(s)));
        strip(pred) == strip(gold)
    }
}

pub fn strict_da(pred: &[String], gold: &[String]) -> bool {
    Evaluator::default().strict(pred, gold)
}

pub fn flexible_da(pred: &[String], gold: &[String]) -> bool {
    Evaluator::default().flexible(pred, gold)
}

pub fn strip_units(s: &str) -> String {
    UnitLexicon::default().strip(s)
}
