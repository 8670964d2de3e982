use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::corpus::Corpus;
use super::score::{execute_prediction, read_predictions, resolve, summarize, Metrics, Outcome};
use super::PipelineError;
use crate::eval::{plurality, Evaluator, ModelRun};
use crate::linearize::LinearizationScheme;

/// One model's prediction file contents and its validation FDA.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInput {
    pub model_id: String,
    pub predictions: String,
    pub validation_fda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStep {
    pub models: Vec<String>,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsemblePrediction {
    pub id: String,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleOutput {
    pub scheme: String,
    /// Metrics after adding each run in the given order.
    pub steps: Vec<EnsembleStep>,
    /// Votes of the full ensemble.
    pub predictions: Vec<EnsemblePrediction>,
}

struct ExecutedRun {
    run: ModelRun,
    outcomes: BTreeMap<String, Outcome>,
}

fn execute_run(
    corpus: &Corpus,
    input: &RunInput,
    scheme: LinearizationScheme,
) -> Result<ExecutedRun, PipelineError> {
    let (preds, _) = read_predictions(&input.predictions);
    resolve(corpus, &preds)?;
    let outcomes: BTreeMap<String, Outcome> = preds
        .iter()
        .map(|p| {
            (
                p.id.clone(),
                execute_prediction(&p.predicted_tokens, scheme),
            )
        })
        .collect();
    let predictions = outcomes
        .iter()
        .map(|(id, o)| (id.clone(), o.answer().map(<[String]>::to_vec)))
        .collect();
    Ok(ExecutedRun {
        run: ModelRun {
            model_id: input.model_id.clone(),
            predictions,
            validation_fda: input.validation_fda,
        },
        outcomes,
    })
}

/// Votes per query over growing prefixes of `runs`.
///
/// Every run must cover the same query ids. A query nobody answers keeps the
/// first run's failure kind.
pub fn ensemble(
    corpus: &Corpus,
    runs: &[RunInput],
    scheme: LinearizationScheme,
    eval: &Evaluator,
) -> Result<EnsembleOutput, PipelineError> {
    let executed = runs
        .iter()
        .map(|r| execute_run(corpus, r, scheme))
        .collect::<Result<Vec<_>, _>>()?;
    let first = executed.first().ok_or(PipelineError::NoRuns)?;
    let ids: BTreeSet<&String> = first.outcomes.keys().collect();
    let mut mismatch = BTreeSet::new();
    for r in &executed[1..] {
        let other: BTreeSet<&String> = r.outcomes.keys().collect();
        mismatch.extend(ids.symmetric_difference(&other).map(|s| s.to_string()));
    }
    if !mismatch.is_empty() {
        return Err(PipelineError::QuerySetMismatch(
            mismatch.into_iter().collect(),
        ));
    }

    let models: Vec<ModelRun> = executed.iter().map(|e| e.run.clone()).collect();
    let vote = |k: usize| -> Vec<(String, Outcome)> {
        ids.iter()
            .map(|id| {
                let outcome = match plurality(&models[..k], id) {
                    Some(a) => Outcome::Answer(a),
                    None => first.outcomes[*id].clone(),
                };
                (id.to_string(), outcome)
            })
            .collect()
    };
    let mut steps = Vec::with_capacity(models.len());
    for k in 1..=models.len() {
        let outcomes = vote(k)
            .into_iter()
            .map(|(id, o)| (corpus.get(&id).expect("resolved above"), o))
            .collect();
        let (metrics, _) = summarize(corpus, outcomes, 0, eval);
        steps.push(EnsembleStep {
            models: models[..k].iter().map(|m| m.model_id.clone()).collect(),
            metrics,
        });
    }
    let predictions = vote(models.len())
        .into_iter()
        .map(|(id, outcome)| EnsemblePrediction { id, outcome })
        .collect();
    Ok(EnsembleOutput {
        scheme: scheme.name().to_string(),
        steps,
        predictions,
    })
}
