use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tabalg::eval::{Evaluator, UnitLexicon};
use tabalg::graph::{full_execute, graph_stats, partial_execute, Graph, OperatorLevel};
use tabalg::linearize::{delinearize, linearize, LinearizationScheme};
use tabalg::pipeline::{
    ensemble, generate, perturb_corpus, score, Condition, Corpus, GenerateOptions, InputSource,
    RunInput, DEFAULT_BUDGET,
};
use tabalg::sql::compile_sql;
use tabalg::Table;

#[derive(Parser)]
#[command(
    name = "tabalg",
    version,
    about = "Compile, execute, linearize and score table algebra graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a SQL query against a table into a graph
    Compile(QueryArgs),
    /// Execute a query, fully or up to an operator level
    Execute {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "Full")]
        level: OperatorLevel,
    },
    /// Partially execute a query and linearize the result
    Linearize {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "P")]
        level: OperatorLevel,
        #[arg(long, default_value = "pre")]
        scheme: LinearizationScheme,
    },
    /// Parse a linearized sequence back into a graph and execute it
    Delinearize {
        /// The sequence; read from stdin when absent
        #[arg(long)]
        tokens: Option<String>,
        #[arg(long, default_value = "pre")]
        scheme: LinearizationScheme,
    },
    /// Emit training examples for a corpus over a grid of conditions
    Generate(GenerateArgs),
    /// Score predicted sequences against gold answers
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "pre")]
        scheme: LinearizationScheme,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Write a column-perturbed copy of a corpus
    Perturb {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Majority-vote several prediction files, adding one run at a time
    Ensemble {
        #[arg(long)]
        corpus: PathBuf,
        /// Prediction file; the model id is its file stem. Repeat in ensemble order.
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        /// Validation FDA of each run, in the same order
        #[arg(long = "fda", required = true)]
        fdas: Vec<f64>,
        #[arg(long, default_value = "pre")]
        scheme: LinearizationScheme,
        #[command(flatten)]
        metric: MetricArgs,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    sql: String,
    /// TSV table with a header line
    #[arg(long)]
    table: PathBuf,
}

impl QueryArgs {
    fn graph(&self) -> Result<Graph> {
        let table = Table::load(&self.table, b'\t')?;
        Ok(compile_sql(&self.sql, &table)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelSet {
    /// The seven levels of the standard grid
    Grid,
    /// All eight levels
    All,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Restrict to these levels (repeatable)
    #[arg(long = "level")]
    levels: Vec<OperatorLevel>,
    /// Level set used when no --level is given
    #[arg(long = "levels", value_enum, default_value = "grid")]
    level_set: LevelSet,
    /// Restrict to these schemes (repeatable)
    #[arg(long = "scheme")]
    schemes: Vec<LinearizationScheme>,
    #[arg(long, default_value = "question")]
    input_source: InputSource,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Perturb each table's visible prefix with this seed first
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSONL file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricArgs {
    /// JSON file with `prefixes` and `suffixes` unit lists
    #[arg(long)]
    unit_lexicon: Option<PathBuf>,
    /// Compare answers as sets instead of multisets
    #[arg(long)]
    set_equality: bool,
}

impl MetricArgs {
    fn evaluator(&self) -> Result<Evaluator> {
        let lexicon = match &self.unit_lexicon {
            Some(p) => UnitLexicon::load(p).map_err(anyhow::Error::msg)?,
            None => UnitLexicon::default(),
        };
        Ok(Evaluator {
            lexicon,
            set_equality: self.set_equality,
        })
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile(q) => {
            let g = q.graph()?;
            let stats = graph_stats(&g);
            print_json(&json!({
                "graph": g.to_json(),
                "operator_count": stats.operator_count,
                "complexity_bin": stats.complexity_bin(),
                "kinds": stats.kinds_present,
            }))
        }
        Command::Execute { query, level } => {
            let g = query.graph()?;
            let reduced = partial_execute(&g, level.allowed())?;
            let mut out = json!({ "level": level, "graph": reduced.to_json() });
            if reduced.root_value().is_some() {
                out["answer"] = json!(full_execute(&reduced)?);
            }
            print_json(&out)
        }
        Command::Linearize {
            query,
            level,
            scheme,
        } => {
            let g = query.graph()?;
            let reduced = partial_execute(&g, level.allowed())?;
            print_json(&json!({
                "level": level,
                "scheme": scheme.name(),
                "target_tokens": linearize(&reduced, scheme),
            }))
        }
        Command::Delinearize { tokens, scheme } => {
            let tokens = match tokens {
                Some(t) => t,
                None => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s)?;
                    s.trim_end_matches('\n').to_string()
                }
            };
            let g = delinearize(&tokens, scheme)?;
            let mut out = json!({ "scheme": scheme.name(), "graph": g.to_json() });
            match full_execute(&g) {
                Ok(a) => out["answer"] = json!(a),
                Err(e) => {
                    out["error"] =
                        json!({ "code": e.code(), "message": e.to_string(), "node_id": e.node() })
                }
            }
            print_json(&out)
        }
        Command::Generate(args) => run_generate(args),
        Command::Score {
            corpus,
            predictions,
            scheme,
            metric,
        } => {
            let corpus = Corpus::load(&corpus)?;
            let report = score(&corpus, &read(&predictions)?, scheme, &metric.evaluator()?)?;
            print_json(&report)
        }
        Command::Perturb {
            corpus,
            seed,
            budget,
            out,
        } => {
            let corpus = Corpus::load(&corpus)?;
            print_json(&perturb_corpus(&corpus, seed, budget, &out)?)
        }
        Command::Ensemble {
            corpus,
            runs,
            fdas,
            scheme,
            metric,
        } => {
            if runs.len() != fdas.len() {
                bail!("got {} --run but {} --fda values", runs.len(), fdas.len());
            }
            let corpus = Corpus::load(&corpus)?;
            let inputs = runs
                .iter()
                .zip(&fdas)
                .map(|(p, f)| {
                    Ok(RunInput {
                        model_id: p
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default(),
                        predictions: read(p)?,
                        validation_fda: *f,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            print_json(&ensemble(&corpus, &inputs, scheme, &metric.evaluator()?)?)
        }
    }
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let corpus = Corpus::load(&args.corpus)?;
    let levels = if !args.levels.is_empty() {
        args.levels.clone()
    } else {
        match args.level_set {
            LevelSet::Grid => OperatorLevel::GRID.to_vec(),
            LevelSet::All => OperatorLevel::ALL.to_vec(),
        }
    };
    let schemes: BTreeSet<LinearizationScheme> = args.schemes.iter().copied().collect();
    let conditions = Condition::grid(&levels)
        .into_iter()
        .filter(|c| schemes.is_empty() || schemes.contains(&c.scheme))
        .collect();
    let opts = GenerateOptions {
        conditions,
        input_source: args.input_source,
        budget: args.budget,
        perturb_seed: args.seed,
    };
    let out = generate(&corpus, &opts);
    let jsonl = out.to_jsonl();
    match &args.out {
        Some(p) => std::fs::write(p, jsonl).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(jsonl.as_bytes())?,
    }
    let summary = json!({
        "examples": corpus.examples.len(),
        "generated": out.generated,
        "records": out.records.len(),
        "skipped": out.skipped,
    });
    eprintln!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if closed_stdout(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = json!({ "error": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

/// A reader such as `head` hung up; not worth reporting.
fn closed_stdout(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .map(std::io::Error::kind)
            .or_else(|| {
                c.downcast_ref::<serde_json::Error>()
                    .and_then(serde_json::Error::io_error_kind)
            })
            == Some(std::io::ErrorKind::BrokenPipe)
    })
}
