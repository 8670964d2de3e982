use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{partial_execute, Graph, GraphError, OperatorLevel};
use crate::linearize::{encode_input, linearize, EncodedInput, LinearizationScheme};
use crate::sql::{compile_sql, SqlError};
use crate::table::{Table, TableError};

/// What the encoder reads before the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Sql,
    #[default]
    Question,
}

impl InputSource {
    pub fn name(self) -> &'static str {
        match self {
            InputSource::Sql => "sql",
            InputSource::Question => "question",
        }
    }
}

impl FromStr for InputSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sql" => Ok(InputSource::Sql),
            "question" => Ok(InputSource::Question),
            _ => Err(format!(
                "unknown input source `{s}` (expected sql or question)"
            )),
        }
    }
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One (level, scheme) cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Condition {
    pub level: OperatorLevel,
    pub scheme: LinearizationScheme,
}

impl Condition {
    pub fn new(level: OperatorLevel, scheme: LinearizationScheme) -> Condition {
        Condition { level, scheme }
    }

    /// Every scheme at each of `levels`, level-major.
    pub fn grid(levels: &[OperatorLevel]) -> Vec<Condition> {
        levels
            .iter()
            .flat_map(|l| LinearizationScheme::ALL.map(|s| Condition::new(*l, s)))
            .collect()
    }

    /// The 7 x 6 default grid.
    pub fn default_grid() -> Vec<Condition> {
        Condition::grid(&OperatorLevel::GRID)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExampleError {
    #[error("example has no SQL annotation")]
    MissingSql,
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl ExampleError {
    pub fn code(&self) -> &'static str {
        match self {
            ExampleError::MissingSql => "MissingSql",
            ExampleError::Sql(e) => e.code(),
            ExampleError::Graph(e) => e.code(),
            ExampleError::Table(e) => e.code(),
        }
    }

    pub fn node(&self) -> Option<usize> {
        match self {
            ExampleError::Graph(e) | ExampleError::Sql(SqlError::Graph(e)) => e.node(),
            _ => None,
        }
    }
}

/// Input and target for one condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedExample {
    pub condition: Condition,
    pub input_tokens: String,
    pub target_tokens: String,
}

pub fn compile_example(sql: Option<&str>, table: &Table) -> Result<Graph, ExampleError> {
    let sql = sql.ok_or(ExampleError::MissingSql)?;
    Ok(compile_sql(sql, table)?)
}

pub fn encoder_input(
    source: InputSource,
    question: &str,
    sql: Option<&str>,
    table: &Table,
    budget: usize,
) -> EncodedInput {
    let lead = match source {
        InputSource::Sql => sql.unwrap_or_default(),
        InputSource::Question => question,
    };
    encode_input(lead, table, budget)
}

pub fn target_tokens(graph: &Graph, condition: Condition) -> Result<String, GraphError> {
    let reduced = partial_execute(graph, condition.level.allowed())?;
    Ok(linearize(&reduced, condition.scheme))
}

/// Builds inputs and targets for every condition. Any failure rejects the
/// whole example so that each kept example yields one record per condition.
pub fn generate_example(
    question: &str,
    sql: Option<&str>,
    table: &Table,
    conditions: &[Condition],
    source: InputSource,
    budget: usize,
) -> Result<Vec<GeneratedExample>, ExampleError> {
    let graph = compile_example(sql, table)?;
    let input = encoder_input(source, question, sql, table, budget).text;
    conditions
        .iter()
        .map(|c| {
            Ok(GeneratedExample {
                condition: *c,
                input_tokens: input.clone(),
                target_tokens: target_tokens(&graph, *c)?,
            })
        })
        .collect()
}
