//! Denotation metrics, ensembling and table perturbation.

mod ensemble;
mod metrics;
mod perturb;

pub use ensemble::{ensemble_vote, plurality, ModelRun};
pub use metrics::{flexible_da, normalize_value, strict_da, strip_units, Evaluator, UnitLexicon};
pub use perturb::{example_seed, perturb_columns};
