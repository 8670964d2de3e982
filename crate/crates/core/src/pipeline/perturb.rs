use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::corpus::{AnnotatedExample, Corpus};
use super::PipelineError;
use crate::eval::{example_seed, perturb_columns};
use crate::linearize::encode_input;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedTable {
    pub id: String,
    pub source: PathBuf,
    pub table_path: PathBuf,
    pub seed: u64,
    pub visible_row_count: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbManifest {
    pub seed: u64,
    pub budget: usize,
    pub tables: Vec<PerturbedTable>,
}

fn file_stem(id: &str, taken: &mut BTreeSet<String>) -> String {
    let base: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    let mut name = base.clone();
    let mut n = 1;
    while !taken.insert(name.clone()) {
        n += 1;
        name = format!("{base}-{n}");
    }
    name
}

/// Writes a perturbed copy of the corpus under `out_dir`.
///
/// Each example gets its own table `tables/<id>.tsv`, shuffled within its
/// visible prefix for the paired question; `examples.jsonl` points at the
/// new tables and `manifest.json` records seeds and visible counts.
pub fn perturb_corpus(
    corpus: &Corpus,
    seed: u64,
    budget: usize,
    out_dir: &Path,
) -> Result<PerturbManifest, PipelineError> {
    let tables_dir = out_dir.join("tables");
    std::fs::create_dir_all(&tables_dir).map_err(|e| PipelineError::io(&tables_dir, e))?;
    let mut taken = BTreeSet::new();
    let mut examples = Vec::with_capacity(corpus.examples.len());
    let mut tables = Vec::with_capacity(corpus.examples.len());
    for ex in &corpus.examples {
        let table = corpus
            .table(ex)
            .map_err(|e| PipelineError::io(&corpus.table_file(ex), e))?;
        let visible = encode_input(&ex.question, &table, budget).visible_row_count;
        let ex_seed = example_seed(seed, &ex.id);
        let perturbed = perturb_columns(&table, visible, ex_seed);
        let rel = PathBuf::from("tables").join(format!("{}.tsv", file_stem(&ex.id, &mut taken)));
        let dest = out_dir.join(&rel);
        std::fs::write(&dest, perturbed.to_delimited(b'\t'))
            .map_err(|e| PipelineError::io(&dest, e))?;
        tables.push(PerturbedTable {
            id: ex.id.clone(),
            source: ex.table_path.clone(),
            table_path: rel.clone(),
            seed: ex_seed,
            visible_row_count: visible,
            rows: table.num_rows(),
        });
        examples.push(AnnotatedExample {
            table_path: rel,
            ..ex.clone()
        });
    }
    let out = Corpus::new(out_dir, examples)?;
    let jsonl = out_dir.join("examples.jsonl");
    std::fs::write(&jsonl, out.to_jsonl()).map_err(|e| PipelineError::io(&jsonl, e))?;
    let manifest = PerturbManifest {
        seed,
        budget,
        tables,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    Ok(manifest)
}
