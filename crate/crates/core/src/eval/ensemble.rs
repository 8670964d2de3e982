use std::cmp::Reverse;
use std::collections::BTreeMap;

use rust_decimal::Decimal;

use super::metrics::normalize_value;

/// One model's predictions. `None` marks a prediction that failed to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRun {
    pub model_id: String,
    pub predictions: BTreeMap<String, Option<Vec<String>>>,
    pub validation_fda: f64,
}

fn exact(f: f64) -> Decimal {
    // the shortest round-trip rendering keeps sums like 0.1 + 0.2 exact
    f.to_string().parse().unwrap_or_default()
}

struct Ballot<'a> {
    votes: usize,
    fda_sum: Decimal,
    best_fda: Decimal,
    lowest_id: &'a str,
    answer: &'a [String],
    answer_fda: Decimal,
}

/// The plurality answer for one query, or empty when every run abstains.
pub fn ensemble_vote(runs: &[ModelRun], query_id: &str) -> Vec<String> {
    plurality(runs, query_id).unwrap_or_default()
}

/// The winning answer for one query.
///
/// Ties go to the larger summed validation FDA, then to the group holding the
/// single best run, then to the group holding the smallest model id. Runs
/// without a usable prediction abstain; `None` when nobody votes.
pub fn plurality(runs: &[ModelRun], query_id: &str) -> Option<Vec<String>> {
    let mut ballots: BTreeMap<Vec<String>, Ballot> = BTreeMap::new();
    for run in runs {
        let Some(Some(answer)) = run.predictions.get(query_id) else {
            continue;
        };
        let mut key: Vec<String> = answer.iter().map(|s| normalize_value(s)).collect();
        key.sort();
        let fda = exact(run.validation_fda);
        let b = ballots.entry(key).or_insert(Ballot {
            votes: 0,
            fda_sum: Decimal::ZERO,
            best_fda: fda,
            lowest_id: &run.model_id,
            answer,
            answer_fda: fda,
        });
        b.votes += 1;
        b.fda_sum += fda;
        b.best_fda = b.best_fda.max(fda);
        if run.model_id.as_str() < b.lowest_id {
            b.lowest_id = &run.model_id;
        }
        if fda > b.answer_fda {
            b.answer = answer;
            b.answer_fda = fda;
        }
    }
    ballots
        .values()
        .max_by(|a, b| {
            (a.votes, a.fda_sum, a.best_fda, Reverse(a.lowest_id)).cmp(&(
                b.votes,
                b.fda_sum,
                b.best_fda,
                Reverse(b.lowest_id),
            ))
        })
        .map(|b| b.answer.to_vec())
}
