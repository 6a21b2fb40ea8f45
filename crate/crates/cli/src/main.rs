//! `readi`: run KGQA or TableQA sessions over a dataset, ground a single
//! path, inspect relation binding, or recompute a report from traces.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "readi", version, about = "Ground, edit and evaluate LLM reasoning paths")]
struct Cli {
    /// key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Answer a KGQA dataset and write traces, report and per-question CSV.
    Kgqa {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        knobs: KnobArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Answer a TableQA dataset; tables are read from `<tables>/<table_id>.json`.
    Tableqa {
        #[arg(long)]
        tables: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Ground one path.json on the graph and print the outcomes.
    Instantiate {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        knobs: KnobArgs,
        #[arg(long)]
        path: PathBuf,
    },
    /// Print the top-k relations bound to one natural-language relation.
    Bind {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        relation: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Recompute metrics from an existing traces.jsonl.
    Report {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Needed for KGQA answer coverage; optional for table traces.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        names: Option<PathBuf>,
        #[arg(long)]
        compound: Option<PathBuf>,
        /// Also write report.json and per_question.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
pub struct GraphArgs {
    /// Triples TSV: subject, predicate, object.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// id<TAB>name TSV for entities and relation aliases.
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// One compound-node id per line; overrides detection.
    #[arg(long)]
    pub compound: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct KnobArgs {
    #[arg(long)]
    pub bind_k: Option<usize>,
    #[arg(long)]
    pub queue_threshold: Option<usize>,
    #[arg(long)]
    pub candidate_k: Option<usize>,
    #[arg(long)]
    pub sample_k: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `scripted:FILE` or `http:URL`.
    #[arg(long)]
    pub backend: Option<String>,
    /// Model name sent to the HTTP backend.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_edit: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Questions answered concurrently.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Seeds the sample row shown in table prompts.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Demonstrations per role, e.g. `--shots kg_generate=3`. Repeatable.
    #[arg(long)]
    pub shots: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("Run `readi --help` for usage.");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => config::ConfigFile::load(p)?,
        None => config::ConfigFile::default(),
    };
    match cli.command {
        Command::Kgqa { mut graph, mut knobs, mut run } => {
            graph.fill(&file)?;
            knobs.fill(&file)?;
            run.fill(&file)?;
            commands::kgqa(&graph, &knobs, &run)
        }
        Command::Tableqa { mut tables, mut run } => {
            file.fill("tables", &mut tables)?;
            run.fill(&file)?;
            let tables = tables.ok_or_else(|| CliError::Usage("--tables is required".into()))?;
            commands::tableqa(&tables, &run)
        }
        Command::Instantiate { mut graph, mut knobs, path } => {
            graph.fill(&file)?;
            knobs.fill(&file)?;
            commands::instantiate(&graph, &knobs, &path)
        }
        Command::Bind { mut graph, relation, k } => {
            graph.fill(&file)?;
            commands::bind(&graph, &relation, k)
        }
        Command::Report {
            traces,
            mut dataset,
            mut graph,
            mut names,
            mut compound,
            mut out,
        } => {
            file.fill("dataset", &mut dataset)?;
            file.fill("graph", &mut graph)?;
            file.fill("names", &mut names)?;
            file.fill("compound", &mut compound)?;
            file.fill("out", &mut out)?;
            let dataset = dataset.ok_or_else(|| CliError::Usage("--dataset is required".into()))?;
            let graph = GraphArgs {
                graph,
                names,
                compound,
            };
            commands::report(&traces, &dataset, &graph, out.as_deref())
        }
    }
}

impl GraphArgs {
    fn fill(&mut self, file: &config::ConfigFile) -> Result<(), CliError> {
        file.fill("graph", &mut self.graph)?;
        file.fill("names", &mut self.names)?;
        file.fill("compound", &mut self.compound)
    }
}

impl KnobArgs {
    fn fill(&mut self, file: &config::ConfigFile) -> Result<(), CliError> {
        file.fill("bind-k", &mut self.bind_k)?;
        file.fill("queue-threshold", &mut self.queue_threshold)?;
        file.fill("candidate-k", &mut self.candidate_k)?;
        file.fill("sample-k", &mut self.sample_k)
    }
}

impl RunArgs {
    fn fill(&mut self, file: &config::ConfigFile) -> Result<(), CliError> {
        file.fill("dataset", &mut self.dataset)?;
        file.fill("backend", &mut self.backend)?;
        file.fill("model", &mut self.model)?;
        file.fill("max-edit", &mut self.max_edit)?;
        file.fill("temperature", &mut self.temperature)?;
        file.fill("parallelism", &mut self.parallelism)?;
        file.fill("seed", &mut self.seed)?;
        file.fill("out", &mut self.out)?;
        if self.shots.is_empty() {
            self.shots = file.shots().to_vec();
        }
        Ok(())
    }
}
