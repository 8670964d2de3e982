use serde::Serialize;

use super::corpus::Corpus;
use super::example::{encoder_input, generate_example, Condition, ExampleError, InputSource};
use super::DEFAULT_BUDGET;
use crate::eval::{example_seed, perturb_columns};

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub conditions: Vec<Condition>,
    pub input_source: InputSource,
    pub budget: usize,
    /// When set, each table is column-perturbed over its visible prefix first.
    pub perturb_seed: Option<u64>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            conditions: Condition::default_grid(),
            input_source: InputSource::Question,
            budget: DEFAULT_BUDGET,
            perturb_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratedRecord {
    pub id: String,
    pub level: String,
    pub scheme: String,
    pub input_tokens: String,
    pub target_tokens: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedExample {
    pub id: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerateOutput {
    pub records: Vec<GeneratedRecord>,
    pub skipped: Vec<SkippedExample>,
    /// Examples that produced records.
    pub generated: usize,
}

impl GenerateOutput {
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }
}

/// Emits one record per (kept example, condition), in id then grid order.
pub fn generate(corpus: &Corpus, opts: &GenerateOptions) -> GenerateOutput {
    let mut out = GenerateOutput {
        records: Vec::new(),
        skipped: Vec::new(),
        generated: 0,
    };
    for ex in &corpus.examples {
        let result = corpus
            .table(ex)
            .map_err(ExampleError::from)
            .and_then(|mut table| {
                let sql = ex.sql.as_deref();
                if let Some(seed) = opts.perturb_seed {
                    let visible =
                        encoder_input(opts.input_source, &ex.question, sql, &table, opts.budget)
                            .visible_row_count;
                    table = perturb_columns(&table, visible, example_seed(seed, &ex.id));
                }
                generate_example(
                    &ex.question,
                    sql,
                    &table,
                    &opts.conditions,
                    opts.input_source,
                    opts.budget,
                )
            });
        match result {
            Ok(items) => {
                out.generated += 1;
                out.records
                    .extend(items.into_iter().map(|g| GeneratedRecord {
                        id: ex.id.clone(),
                        level: g.condition.level.name().to_string(),
                        scheme: g.condition.scheme.name().to_string(),
                        input_tokens: g.input_tokens,
                        target_tokens: g.target_tokens,
                    }));
            }
            Err(e) => out.skipped.push(SkippedExample {
                id: ex.id.clone(),
                code: e.code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    out
}
