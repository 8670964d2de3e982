#![allow(dead_code)]

pub mod canon;
pub mod fuzz;
pub mod naive;
pub mod pairs;

use std::path::PathBuf;

use tabalg::graph::{Graph, GraphBuilder, GraphError, Payload};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// The same graph with every value's header dropped.
pub fn headerless(g: &Graph) -> Graph {
    let mut b = GraphBuilder::new();
    let mut map = Vec::with_capacity(g.len());
    for n in g.nodes() {
        let id = match &n.payload {
            Payload::Value(v) => b.value(v.clone().without_header()),
            Payload::Op(op) => b
                .op(op.clone(), n.children.iter().map(|c| map[*c]).collect())
                .unwrap(),
        };
        map.push(id);
    }
    b.finish(map[g.root()]).unwrap()
}

/// Error code, looking through execution failures to the operator error.
pub fn error_code(e: &GraphError) -> &'static str {
    match e {
        GraphError::Execution { source, .. } => source.code(),
        other => other.code(),
    }
}

pub fn mini_corpus() -> tabalg::pipeline::Corpus {
    tabalg::pipeline::Corpus::load(&data_dir().join("mini/examples.jsonl")).unwrap()
}

/// Hand-built prediction runs: `(model id, predictions, validation FDA)`.
pub fn ensemble_fixture(name: &str) -> Vec<tabalg::pipeline::RunInput> {
    let fdas: &[(&str, f64)] = match name {
        "three" => &[("a", 0.6), ("b", 0.5), ("c", 0.7)],
        "five" => &[
            ("m1", 0.5),
            ("m2", 0.4),
            ("m3", 0.45),
            ("m4", 0.45),
            ("m5", 0.3),
        ],
        other => panic!("no fixture {other}"),
    };
    fdas.iter()
        .map(|(id, fda)| tabalg::pipeline::RunInput {
            model_id: id.to_string(),
            predictions: std::fs::read_to_string(
                data_dir()
                    .join("ensemble")
                    .join(name)
                    .join(format!("{id}.jsonl")),
            )
            .unwrap(),
            validation_fda: *fda,
        })
        .collect()
}
