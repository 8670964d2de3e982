//! Corpus-level generation, scoring, perturbation and ensembling.

mod corpus;
mod ensemble;
mod example;
mod generate;
mod perturb;
mod score;

use thiserror::Error;

pub use corpus::{AnnotatedExample, Corpus};
pub use ensemble::{ensemble, EnsembleOutput, EnsemblePrediction, EnsembleStep, RunInput};
pub use example::{
    compile_example, encoder_input, generate_example, target_tokens, Condition, ExampleError,
    GeneratedExample, InputSource,
};
pub use generate::{generate, GenerateOptions, GenerateOutput, GeneratedRecord, SkippedExample};
pub use perturb::{perturb_corpus, PerturbManifest, PerturbedTable};
pub use score::{
    execute_prediction, read_predictions, score, Bucket, Metrics, Outcome, Prediction, QueryScore,
    ScoreReport,
};

/// Default whitespace-token budget for encoder inputs.
pub const DEFAULT_BUDGET: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("no corpus example with id `{0}`")]
    MissingId(String),
    #[error("runs disagree on query ids: {}", .0.join(", "))]
    QuerySetMismatch(Vec<String>),
    #[error("at least one run is required")]
    NoRuns,
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "IoError",
            PipelineError::Malformed { .. } => "MalformedInput",
            PipelineError::DuplicateId(_) => "DuplicateId",
            PipelineError::MissingId(_) => "MissingId",
            PipelineError::QuerySetMismatch(_) => "QuerySetMismatch",
            PipelineError::NoRuns => "NoRuns",
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> PipelineError {
        PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
