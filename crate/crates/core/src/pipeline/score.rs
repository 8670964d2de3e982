use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::corpus::{AnnotatedExample, Corpus};
use super::example::compile_example;
use super::PipelineError;
use crate::eval::Evaluator;
use crate::graph::{full_execute, graph_stats};
use crate::linearize::{delinearize, LinearizationScheme};

/// Bin for examples whose gold query is unknown.
const UNANNOTATED: &str = "unannotated";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub predicted_tokens: String,
}

/// Splits prediction JSON lines into well-formed records and a count of bad lines.
pub fn read_predictions(text: &str) -> (Vec<Prediction>, usize) {
    let mut good = Vec::new();
    let mut bad = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<Prediction>(line) {
            Ok(p) => good.push(p),
            Err(_) => bad += 1,
        }
    }
    (good, bad)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "answer")]
pub enum Outcome {
    Answer(Vec<String>),
    ParseFailure,
    ExecutionFailure,
}

impl Outcome {
    pub fn answer(&self) -> Option<&[String]> {
        match self {
            Outcome::Answer(a) => Some(a),
            _ => None,
        }
    }
}

/// Delinearizes and fully executes one predicted sequence.
pub fn execute_prediction(tokens: &str, scheme: LinearizationScheme) -> Outcome {
    match delinearize(tokens, scheme) {
        Err(_) => Outcome::ParseFailure,
        Ok(g) => match full_execute(&g) {
            Ok(a) => Outcome::Answer(a),
            Err(_) => Outcome::ExecutionFailure,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Bucket {
    pub count: usize,
    pub sda: f64,
    pub fda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryScore {
    pub id: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub sda: f64,
    pub fda: f64,
    pub bin: String,
    pub kinds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub total: usize,
    pub malformed_lines: usize,
    pub parse_failures: usize,
    pub execution_failures: usize,
    pub sda: f64,
    pub fda: f64,
    pub by_kind: BTreeMap<String, Bucket>,
    pub by_bin: BTreeMap<String, Bucket>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub scheme: String,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub per_query: Vec<QueryScore>,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Gold-query operator bin and kinds, used for the breakdowns.
fn gold_profile(corpus: &Corpus, ex: &AnnotatedExample) -> (String, Vec<String>) {
    let graph = corpus
        .table(ex)
        .ok()
        .and_then(|t| compile_example(ex.sql.as_deref(), &t).ok());
    match graph {
        Some(g) => {
            let s = graph_stats(&g);
            (
                s.complexity_bin().to_string(),
                s.kinds_present
                    .iter()
                    .map(|k| k.name().to_string())
                    .collect(),
            )
        }
        None => (UNANNOTATED.to_string(), Vec::new()),
    }
}

/// Scores outcomes against gold and aggregates them.
pub(crate) fn summarize(
    corpus: &Corpus,
    outcomes: Vec<(&AnnotatedExample, Outcome)>,
    malformed_lines: usize,
    eval: &Evaluator,
) -> (Metrics, Vec<QueryScore>) {
    let mut per_query = Vec::with_capacity(outcomes.len());
    let mut by_kind: BTreeMap<String, Bucket> = BTreeMap::new();
    let mut by_bin: BTreeMap<String, Bucket> = BTreeMap::new();
    let (mut sda_sum, mut fda_sum) = (0.0, 0.0);
    let (mut parse_failures, mut execution_failures) = (0, 0);
    for (ex, outcome) in outcomes {
        let (sda, fda) = match &outcome {
            Outcome::Answer(a) => (
                eval.strict(a, &ex.gold_answer) as u8 as f64,
                eval.flexible(a, &ex.gold_answer) as u8 as f64,
            ),
            Outcome::ParseFailure => {
                parse_failures += 1;
                (0.0, 0.0)
            }
            Outcome::ExecutionFailure => {
                execution_failures += 1;
                (0.0, 0.0)
            }
        };
        sda_sum += sda;
        fda_sum += fda;
        let (bin, kinds) = gold_profile(corpus, ex);
        for key in kinds.iter().cloned() {
            add(by_kind.entry(key).or_default(), sda, fda);
        }
        add(by_bin.entry(bin.clone()).or_default(), sda, fda);
        per_query.push(QueryScore {
            id: ex.id.clone(),
            outcome,
            sda,
            fda,
            bin,
            kinds,
        });
    }
    for b in by_kind.values_mut().chain(by_bin.values_mut()) {
        b.sda = mean(b.sda, b.count);
        b.fda = mean(b.fda, b.count);
    }
    let total = per_query.len() + malformed_lines;
    let metrics = Metrics {
        total,
        malformed_lines,
        parse_failures,
        execution_failures,
        sda: mean(sda_sum, total),
        fda: mean(fda_sum, total),
        by_kind,
        by_bin,
    };
    (metrics, per_query)
}

fn add(b: &mut Bucket, sda: f64, fda: f64) {
    b.count += 1;
    b.sda += sda;
    b.fda += fda;
}

/// Resolves prediction ids against the corpus; ids must be known and unique.
pub(crate) fn resolve<'c>(
    corpus: &'c Corpus,
    predictions: &[Prediction],
) -> Result<Vec<&'c AnnotatedExample>, PipelineError> {
    let mut seen = BTreeSet::new();
    predictions
        .iter()
        .map(|p| {
            if !seen.insert(p.id.as_str()) {
                return Err(PipelineError::DuplicateId(p.id.clone()));
            }
            corpus
                .get(&p.id)
                .ok_or_else(|| PipelineError::MissingId(p.id.clone()))
        })
        .collect()
}

/// Executes each prediction and compares it with the gold answer.
///
/// Malformed lines count as failed queries in the means.
pub fn score(
    corpus: &Corpus,
    predictions: &str,
    scheme: LinearizationScheme,
    eval: &Evaluator,
) -> Result<ScoreReport, PipelineError> {
    let (preds, malformed) = read_predictions(predictions);
    let examples = resolve(corpus, &preds)?;
    let outcomes = examples
        .into_iter()
        .zip(&preds)
        .map(|(ex, p)| (ex, execute_prediction(&p.predicted_tokens, scheme)))
        .collect();
    let (metrics, per_query) = summarize(corpus, outcomes, malformed, eval);
    Ok(ScoreReport {
        scheme: scheme.name().to_string(),
        metrics,
        per_query,
    })
}
