//! Comparison of linearized sequences against hand-transcribed ones.
//!
//! Transcriptions elide rows with `..` or `...`, space separators loosely and
//! name aliases arbitrarily, sometimes writing one node twice under two names.
//! Matching lowercases everything, treats an elision as one or more rows and,
//! for alias schemes, looks for an alias bijection after merging duplicates.

use std::collections::BTreeMap;

const OPERATOR_WORDS: [&str; 12] = [
    "limit", "ob", "gb", "where", "having", "in", "not", "count", "sum", "avg", "min", "max",
];

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_alias(w: &str) -> bool {
    w.len() > 1 && w.starts_with('n') && w[1..].chars().all(|c| c.is_ascii_digit())
}

fn is_operator(text: &str) -> bool {
    let first = text.split_whitespace().next().unwrap_or("");
    OPERATOR_WORDS.contains(&first)
        || matches!(
            first,
            ">" | "<" | ">=" | "<=" | "=" | "!=" | "and" | "or" | "is"
        )
}

fn is_elision(row: &str) -> bool {
    !row.is_empty() && row.chars().all(|c| c == '.')
}

/// Rows of a value item, each a list of members per column.
fn rows(text: &str) -> Vec<String> {
    text.split('|')
        .map(|r| r.split(",,").map(collapse).collect::<Vec<_>>().join(",,"))
        .collect()
}

/// Whether `actual` rows fit `pattern`, where an elision stands for one or more rows.
pub fn rows_match(pattern: &[String], actual: &[String]) -> bool {
    match pattern.split_first() {
        None => actual.is_empty(),
        Some((p, rest)) if is_elision(p) => {
            (1..=actual.len()).any(|k| rows_match(rest, &actual[k..]))
        }
        Some((p, rest)) => actual.first().is_some_and(|a| a == p) && rows_match(rest, &actual[1..]),
    }
}

fn items(seq: &str) -> Vec<String> {
    seq.to_lowercase()
        .split("||")
        .map(|i| i.trim_start_matches('|').trim().to_string())
        .filter(|i| !i.is_empty())
        .collect()
}

/// Inline sequences: the same items in the same order; values up to elision.
pub fn inline_match(expected: &str, actual: &str) -> Result<(), String> {
    let (e, a) = (items(expected), items(actual));
    if e.len() != a.len() {
        return Err(format!("{} items expected, got {}", e.len(), a.len()));
    }
    for (k, (x, y)) in e.iter().zip(&a).enumerate() {
        let ok = match (is_operator(x), is_operator(y)) {
            (true, true) => collapse(x) == collapse(y),
            (false, false) => rows_match(&rows(x), &rows(y)),
            _ => false,
        };
        if !ok {
            return Err(format!("item {k}: expected `{x}`, got `{y}`"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Record {
    Op { text: String, children: Vec<String> },
    Value(Vec<String>),
}

fn records(seq: &str) -> Result<BTreeMap<String, Record>, String> {
    let mut out = BTreeMap::new();
    for section in seq.to_lowercase().split("|||") {
        for item in items(section) {
            let (alias, rest) = item.split_once(char::is_whitespace).unwrap_or((&item, ""));
            if !is_alias(alias) {
                return Err(format!("record without alias: `{item}`"));
            }
            let rest = rest.trim();
            let record = if is_operator(rest) {
                let mut words: Vec<&str> = rest.split_whitespace().collect();
                let mut children = Vec::new();
                while words.last().is_some_and(|w| is_alias(w)) {
                    children.push(words.pop().unwrap().to_string());
                }
                children.reverse();
                Record::Op {
                    text: words.join(" "),
                    children,
                }
            } else {
                Record::Value(rows(rest))
            };
            out.insert(alias.to_string(), record);
        }
    }
    Ok(out)
}

/// Maps every alias to the first alias whose record is structurally identical.
fn merge(recs: &BTreeMap<String, Record>) -> Result<BTreeMap<String, String>, String> {
    fn key(
        a: &str,
        recs: &BTreeMap<String, Record>,
        memo: &mut BTreeMap<String, String>,
        depth: usize,
    ) -> Result<String, String> {
        if let Some(k) = memo.get(a) {
            return Ok(k.clone());
        }
        if depth > recs.len() {
            return Err(format!("cycle through {a}"));
        }
        let k = match recs.get(a).ok_or_else(|| format!("unknown alias {a}"))? {
            Record::Value(rows) => format!("[{}]", rows.join("|")),
            Record::Op { text, children } => {
                let ks = children
                    .iter()
                    .map(|c| key(c, recs, memo, depth + 1))
                    .collect::<Result<Vec<_>, _>>()?;
                format!("({text} {})", ks.join(" "))
            }
        };
        memo.insert(a.to_string(), k.clone());
        Ok(k)
    }
    let mut memo = BTreeMap::new();
    let mut first: BTreeMap<String, String> = BTreeMap::new();
    let mut rep = BTreeMap::new();
    for a in recs.keys() {
        let k = key(a, recs, &mut memo, 0)?;
        let r = first.entry(k).or_insert_with(|| a.clone()).clone();
        rep.insert(a.clone(), r);
    }
    Ok(rep)
}

struct Matcher<'a> {
    e: &'a BTreeMap<String, Record>,
    a: &'a BTreeMap<String, Record>,
    e_rep: BTreeMap<String, String>,
    a_rep: BTreeMap<String, String>,
    fwd: BTreeMap<String, String>,
    back: BTreeMap<String, String>,
}

impl Matcher<'_> {
    fn walk(&mut self, x: &str, y: &str) -> Result<(), String> {
        let (x, y) = (self.e_rep[x].clone(), self.a_rep[y].clone());
        match (self.fwd.get(&x), self.back.get(&y)) {
            (Some(m), _) if *m != y => return Err(format!("{x} maps to both {m} and {y}")),
            (_, Some(m)) if *m != x => return Err(format!("{y} is named by both {m} and {x}")),
            (Some(_), _) => return Ok(()),
            _ => {}
        }
        self.fwd.insert(x.clone(), y.clone());
        self.back.insert(y.clone(), x.clone());
        match (&self.e[&x], &self.a[&y]) {
            (Record::Value(p), Record::Value(v)) => {
                if rows_match(p, v) {
                    Ok(())
                } else {
                    Err(format!("{x}: rows {p:?} do not fit {v:?}"))
                }
            }
            (
                Record::Op {
                    text: t1,
                    children: c1,
                },
                Record::Op {
                    text: t2,
                    children: c2,
                },
            ) => {
                if collapse(t1) != collapse(t2) || c1.len() != c2.len() {
                    return Err(format!("{x}: `{t1}` {c1:?} against `{t2}` {c2:?}"));
                }
                for (p, q) in c1.clone().iter().zip(c2.clone().iter()) {
                    self.walk(p, q)?;
                }
                Ok(())
            }
            _ => Err(format!("{x} and {y} differ in kind")),
        }
    }
}

fn roots(recs: &BTreeMap<String, Record>, rep: &BTreeMap<String, String>) -> Vec<String> {
    let mut used = std::collections::BTreeSet::new();
    for r in recs.values() {
        if let Record::Op { children, .. } = r {
            used.extend(children.iter().map(|c| rep[c].clone()));
        }
    }
    let mut out: Vec<String> = rep
        .values()
        .filter(|a| !used.contains(*a))
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Alias sequences: equal up to renaming, after merging duplicate records.
pub fn alias_match(expected: &str, actual: &str) -> Result<(), String> {
    let e = records(expected)?;
    let a = records(actual)?;
    let e_rep = merge(&e)?;
    let a_rep = merge(&a)?;
    let (er, ar) = (roots(&e, &e_rep), roots(&a, &a_rep));
    if er.len() != 1 || ar.len() != 1 {
        return Err(format!("roots {er:?} and {ar:?}"));
    }
    let mut m = Matcher {
        e: &e,
        a: &a,
        e_rep,
        a_rep,
        fwd: BTreeMap::new(),
        back: BTreeMap::new(),
    };
    m.walk(&er[0], &ar[0])?;
    let distinct = |rep: &BTreeMap<String, String>| {
        rep.values()
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    };
    if m.fwd.len() != distinct(&m.e_rep) || m.back.len() != distinct(&m.a_rep) {
        return Err("records outside the graph".into());
    }
    Ok(())
}
