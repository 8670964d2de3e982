//! Stateless single-example entry points for host-language wrappers.
//!
//! Each call mirrors the batch pipeline on one example. Failures are reported
//! as [`BindingError`] with a stable code and, for execution failures, the
//! failing node.

use std::str::FromStr;

use serde::Serialize;

use crate::eval::Evaluator;
use crate::graph::OperatorLevel;
use crate::linearize::LinearizationScheme;
use crate::pipeline::{
    execute_prediction, generate_example, Condition, ExampleError, InputSource, Outcome,
};
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BindingError {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_id: Option<usize>,
}

impl std::fmt::Display for BindingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for BindingError {}

impl From<ExampleError> for BindingError {
    fn from(e: ExampleError) -> Self {
        BindingError {
            code: e.code().to_string(),
            message: e.to_string(),
            node_id: e.node(),
        }
    }
}

fn invalid(code: &str, message: String) -> BindingError {
    BindingError {
        code: code.to_string(),
        message,
        node_id: None,
    }
}

fn parse_arg<T: FromStr<Err = String>>(s: &str) -> Result<T, BindingError> {
    s.parse().map_err(|m| invalid("InvalidArgument", m))
}

fn read_table(tsv: &str) -> Result<Table, BindingError> {
    Table::from_delimited(tsv.as_bytes(), b'\t').map_err(|e| ExampleError::from(e).into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundExample {
    pub id: String,
    pub input_tokens: String,
    pub target_tokens: String,
}

/// One generated example. `input_source` is `sql` or `question`; an empty
/// `sql` counts as a missing query.
#[allow(clippy::too_many_arguments)]
pub fn bind_generate(
    id: &str,
    question: &str,
    sql: &str,
    table_tsv: &str,
    level: &str,
    scheme: &str,
    input_source: &str,
    budget: usize,
) -> Result<BoundExample, BindingError> {
    let condition = Condition::new(
        parse_arg::<OperatorLevel>(level)?,
        parse_arg::<LinearizationScheme>(scheme)?,
    );
    let source = parse_arg::<InputSource>(input_source)?;
    let table = read_table(table_tsv)?;
    let sql = Some(sql).filter(|s| !s.trim().is_empty());
    let mut out = generate_example(question, sql, &table, &[condition], source, budget)?;
    let g = out.pop().expect("one condition");
    Ok(BoundExample {
        id: id.to_string(),
        input_tokens: g.input_tokens,
        target_tokens: g.target_tokens,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundScore {
    pub sda: f64,
    pub fda: f64,
}

/// Scores one predicted sequence. Unusable predictions score zero on both.
pub fn bind_score(
    predicted_tokens: &str,
    gold_answer: &[String],
    scheme: &str,
) -> Result<BoundScore, BindingError> {
    let scheme = parse_arg::<LinearizationScheme>(scheme)?;
    let eval = Evaluator::default();
    Ok(match execute_prediction(predicted_tokens, scheme) {
        Outcome::Answer(a) => BoundScore {
            sda: eval.strict(&a, gold_answer) as u8 as f64,
            fda: eval.flexible(&a, gold_answer) as u8 as f64,
        },
        _ => BoundScore { sda: 0.0, fda: 0.0 },
    })
}
