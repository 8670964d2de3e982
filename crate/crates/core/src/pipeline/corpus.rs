use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::table::{Table, TableError};

/// One question with its table, optional SQL annotation and gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub id: String,
    pub question: String,
    /// TSV file, relative to the corpus file's directory.
    pub table_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sql: Option<String>,
    pub gold_answer: Vec<String>,
}

/// Examples sorted by id, plus the directory table paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub base_dir: PathBuf,
    pub examples: Vec<AnnotatedExample>,
}

impl Corpus {
    pub fn new(
        base_dir: impl Into<PathBuf>,
        mut examples: Vec<AnnotatedExample>,
    ) -> Result<Corpus, PipelineError> {
        examples.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = examples.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(PipelineError::DuplicateId(w[0].id.clone()));
        }
        Ok(Corpus {
            base_dir: base_dir.into(),
            examples,
        })
    }

    /// Reads a JSON-lines corpus. Blank lines are ignored.
    pub fn load(path: &Path) -> Result<Corpus, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut examples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ex = serde_json::from_str(line).map_err(|e| PipelineError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            examples.push(ex);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Corpus::new(base, examples)
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedExample> {
        self.examples
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.examples[i])
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.examples.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn table_file(&self, ex: &AnnotatedExample) -> PathBuf {
        self.base_dir.join(&ex.table_path)
    }

    pub fn table(&self, ex: &AnnotatedExample) -> Result<Table, TableError> {
        Table::load(&self.table_file(ex), b'\t')
    }

    pub fn to_jsonl(&self) -> String {
        self.examples
            .iter()
            .map(|e| serde_json::to_string(e).expect("examples serialize") + "\n")
            .collect()
    }
}
