use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use readi::eval::per_question;
use readi::gateway::{demonstration_count, TranscriptFile};
use readi::table::RowSampler;
use readi::trace::{read_dataset, read_traces, write_traces};
use readi::{
    build_report, Backend, Gateway, GoldRecord, HttpBackend, HttpConfig, InstantiatorConfig,
    KnowledgeGraph, ReasoningPath, RelationIndex, RoleName, RoleProfile, SessionConfig, Table,
    TableSessionConfig, TraceRecord, Transcript,
};

use crate::{CliError, GraphArgs, KnobArgs, RunArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_graph(args: &GraphArgs) -> Result<KnowledgeGraph, CliError> {
    let graph = args
        .graph
        .as_deref()
        .ok_or_else(|| usage("--graph is required"))?;
    Ok(KnowledgeGraph::load(graph, args.names.as_deref(), args.compound.as_deref())
        .context("loading graph")?)
}

fn build_index(g: &KnowledgeGraph) -> Result<RelationIndex, CliError> {
    Ok(RelationIndex::from_graph(g).context("indexing relations")?)
}

fn instantiator(knobs: &KnobArgs) -> InstantiatorConfig {
    let d = InstantiatorConfig::default();
    InstantiatorConfig {
        bind_k: knobs.bind_k.unwrap_or(d.bind_k),
        queue_threshold: knobs.queue_threshold.unwrap_or(d.queue_threshold),
        candidate_filter_k: knobs.candidate_k.unwrap_or(d.candidate_filter_k),
        instance_sample_k: knobs.sample_k.unwrap_or(d.instance_sample_k),
    }
}

fn profile(shots: &[String]) -> Result<RoleProfile, CliError> {
    let mut p = RoleProfile::default();
    for spec in shots {
        let (role, n) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--shots expects role=count, got {spec:?}")))?;
        let role: RoleName = role.trim().parse().map_err(usage)?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| usage(format!("--shots {spec:?}: count is not a number")))?;
        let available = demonstration_count(role);
        if n > available {
            return Err(usage(format!(
                "--shots {role}={n}: only {available} demonstrations exist"
            )));
        }
        p.set_shots(role, n);
    }
    Ok(p)
}

/// Either one backend shared by every question, or per-question scripted
/// transcripts keyed by dataset id.
enum Backends {
    Shared(Box<dyn Backend>),
    PerQuestion(BTreeMap<String, TranscriptFile>),
}

impl Backends {
    fn from_spec(spec: Option<&str>, model: Option<&str>) -> Result<Self, CliError> {
        let spec = spec.ok_or_else(|| usage("--backend is required"))?;
        if let Some(file) = spec.strip_prefix("scripted:") {
            let text = fs::read_to_string(file)
                .with_context(|| format!("reading transcript {file}"))?;
            let t: TranscriptFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing transcript {file}"))?;
            if t.sessions.is_empty() {
                Ok(Backends::Shared(Box::new(Transcript::from_file(&t))))
            } else {
                Ok(Backends::PerQuestion(t.sessions))
            }
        } else if let Some(url) = spec.strip_prefix("http:") {
            let model = model.ok_or_else(|| usage("--model is required with an http backend"))?;
            let backend = HttpBackend::new(HttpConfig::new(url, model))
                .map_err(|e| anyhow!("building HTTP client: {e}"))?;
            Ok(Backends::Shared(Box::new(backend)))
        } else {
            Err(usage(format!(
                "--backend must be scripted:FILE or http:URL, got {spec:?}"
            )))
        }
    }

    /// A shared scripted transcript hands out responses in call order, so
    /// questions must then run one at a time.
    fn order_sensitive(&self, spec: Option<&str>) -> bool {
        matches!(self, Backends::Shared(_)) && spec.is_some_and(|s| s.starts_with("scripted:"))
    }

    fn with<R>(&self, id: &str, f: impl FnOnce(&dyn Backend) -> R) -> R {
        match self {
            Backends::Shared(b) => f(b.as_ref()),
            Backends::PerQuestion(map) => {
                let t = map
                    .get(id)
                    .map_or_else(|| Transcript::new(true), Transcript::from_file);
                f(&t)
            }
        }
    }
}

/// Run `f` over the dataset with up to `parallelism` workers; output keeps
/// dataset order.
fn run_all<F>(gold: &[GoldRecord], parallelism: usize, f: F) -> Result<Vec<TraceRecord>, CliError>
where
    F: Fn(&GoldRecord) -> Result<TraceRecord, CliError> + Sync,
{
    if parallelism <= 1 {
        return gold.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| anyhow!("starting worker pool: {e}"))?;
    pool.install(|| gold.par_iter().map(&f).collect())
}

fn parallelism(run: &RunArgs, backends: &Backends) -> usize {
    let p = run.parallelism.unwrap_or(1).max(1);
    if p > 1 && backends.order_sensitive(run.backend.as_deref()) {
        eprintln!("warning: shared scripted transcript; running questions sequentially");
        return 1;
    }
    p
}

fn out_dir(run: &RunArgs) -> Result<PathBuf, CliError> {
    let out = run.out.clone().ok_or_else(|| usage("--out is required"))?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn load_dataset(run: &RunArgs) -> Result<Vec<GoldRecord>, CliError> {
    let path = run
        .dataset
        .as_deref()
        .ok_or_else(|| usage("--dataset is required"))?;
    Ok(read_dataset(path).context("loading dataset")?)
}

pub fn kgqa(graph: &GraphArgs, knobs: &KnobArgs, run: &RunArgs) -> Result<(), CliError> {
    let g = load_graph(graph)?;
    let idx = build_index(&g)?;
    let gold = load_dataset(run)?;
    let profile = profile(&run.shots)?;
    let backends = Backends::from_spec(run.backend.as_deref(), run.model.as_deref())?;
    let out = out_dir(run)?;
    let cfg = SessionConfig {
        max_edit_time: run.max_edit.unwrap_or(readi::session::MULTI_HOP_MAX_EDIT),
        instantiator: instantiator(knobs),
        temperature: run.temperature.unwrap_or(readi::session::DEFAULT_TEMPERATURE),
    };

    let traces = run_all(&gold, parallelism(run, &backends), |q| {
        backends.with(&q.id, |backend| {
            let gw = Gateway::new(backend, profile.clone(), cfg.temperature);
            readi::run_session(&q.id, &q.question, &q.topic_entities, &g, &idx, &gw, &cfg)
                .map(TraceRecord::Kg)
                .map_err(|e| CliError::Data(anyhow!("question {}: {e}", q.id)))
        })
    })?;
    write_outputs(&out, &traces, &gold, &g)
}

pub fn tableqa(tables: &Path, run: &RunArgs) -> Result<(), CliError> {
    let gold = load_dataset(run)?;
    let profile = profile(&run.shots)?;
    let backends = Backends::from_spec(run.backend.as_deref(), run.model.as_deref())?;
    let out = out_dir(run)?;
    let cfg = TableSessionConfig {
        max_edit_time: run.max_edit.unwrap_or(readi::table_session::TABLE_MAX_EDIT),
        sampler: run.seed.map_or(RowSampler::First, RowSampler::Seeded),
    };
    let temperature = run.temperature.unwrap_or(readi::session::DEFAULT_TEMPERATURE);

    let mut loaded: HashMap<String, Table> = HashMap::new();
    for q in &gold {
        let id = q
            .table_id
            .as_deref()
            .ok_or_else(|| anyhow!("question {} has no table_id", q.id))?;
        if !loaded.contains_key(id) {
            let path = tables.join(format!("{id}.json"));
            let t = Table::load(&path).with_context(|| format!("loading table {id}"))?;
            loaded.insert(id.to_owned(), t);
        }
    }

    let traces = run_all(&gold, parallelism(run, &backends), |q| {
        let table = &loaded[q.table_id.as_deref().expect("checked above")];
        Ok(backends.with(&q.id, |backend| {
            let gw = Gateway::new(backend, profile.clone(), temperature);
            TraceRecord::Table(readi::run_table_session(&q.id, &q.question, table, &gw, &cfg))
        }))
    })?;
    write_outputs(&out, &traces, &gold, &empty_graph())
}

/// Print to stdout; a closed pipe (`readi … | head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Data(anyhow!("writing to stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn empty_graph() -> KnowledgeGraph {
    KnowledgeGraph::from_parts(Vec::new(), HashMap::new(), None)
}

pub fn instantiate(graph: &GraphArgs, knobs: &KnobArgs, path: &Path) -> Result<(), CliError> {
    let g = load_graph(graph)?;
    let idx = build_index(&g)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p: ReasoningPath =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for c in &p.constraints {
        if !g.contains_entity(&c.start) {
            eprintln!("warning: start entity {:?} is not in the graph", c.start);
        }
    }
    let outcomes = readi::instantiate_path(&p, &g, &idx, &instantiator(knobs));
    let rendered: Vec<serde_json::Value> = outcomes
        .iter()
        .map(|o| {
            let mut v = serde_json::to_value(o).expect("outcomes serialize");
            let names: Vec<&str> = o.frontier.iter().map(|e| g.friendly_name(e)).collect();
            v["frontier_names"] = serde_json::json!(names);
            v
        })
        .collect();
    let doc = serde_json::json!({
        "question_id": p.question_id,
        "has_error": readi::has_error(&outcomes),
        "outcomes": rendered,
    });
    emit(&serde_json::to_string_pretty(&doc).expect("json serializes"))
}

pub fn bind(graph: &GraphArgs, relation: &str, k: usize) -> Result<(), CliError> {
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let g = load_graph(graph)?;
    let idx = build_index(&g)?;
    let bound = idx.bind_relation(relation, k);
    if bound.candidates.is_empty() {
        eprintln!("no relation shares a token with {relation:?}");
    }
    let lines: Vec<String> = bound
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}\t{}\t{:.4}", i + 1, c.relation, c.score))
        .collect();
    emit(&lines.join("\n"))
}

pub fn report(
    traces: &Path,
    dataset: &Path,
    graph: &GraphArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let traces = read_traces(traces).context("loading traces")?;
    let gold = read_dataset(dataset).context("loading dataset")?;
    let g = if graph.graph.is_some() {
        load_graph(graph)?
    } else {
        if traces.iter().any(|t| matches!(t, TraceRecord::Kg(_))) {
            eprintln!("warning: no --graph; KGQA answer coverage will be 0");
        }
        empty_graph()
    };
    let r = build_report(&traces, &gold, &g).map_err(|e| CliError::Data(e.into()))?;
    emit(&serde_json::to_string_pretty(&r).expect("report serializes"))?;
    if let Some(out) = out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write_report_files(out, &traces, &gold, &g)?;
    }
    Ok(())
}

fn write_outputs(
    out: &Path,
    traces: &[TraceRecord],
    gold: &[GoldRecord],
    g: &KnowledgeGraph,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_traces(&mut buf, traces).context("serializing traces")?;
    fs::write(out.join("traces.jsonl"), buf).context("writing traces.jsonl")?;
    let r = write_report_files(out, traces, gold, g)?;
    eprintln!(
        "{} questions: Hit@1 {:.4}, AC {:.4}; wrote {}",
        r.n_questions,
        r.hit_at_1,
        r.answer_coverage,
        out.display()
    );
    Ok(())
}

fn write_report_files(
    out: &Path,
    traces: &[TraceRecord],
    gold: &[GoldRecord],
    g: &KnowledgeGraph,
) -> Result<readi::MetricsReport, CliError> {
    let r = build_report(traces, gold, g).map_err(|e| CliError::Data(e.into()))?;
    let mut json = serde_json::to_string_pretty(&r).expect("report serializes");
    json.push('\n');
    fs::write(out.join("report.json"), json).context("writing report.json")?;

    let rows = per_question(traces, gold, g).map_err(|e| CliError::Data(e.into()))?;
    let mut w = csv::Writer::from_path(out.join("per_question.csv")).context("opening per_question.csv")?;
    w.write_record([
        "id",
        "hit_at_1",
        "denotation_accuracy",
        "answer_coverage",
        "retrieved_knowledge",
        "lpp",
        "lip",
        "edit_calls",
        "answers",
    ])
    .context("writing per_question.csv")?;
    for row in rows {
        w.write_record([
            row.id,
            row.hit_at_1.to_string(),
            row.denotation_accuracy.to_string(),
            row.answer_coverage.to_string(),
            row.retrieved_knowledge.to_string(),
            row.lpp.to_string(),
            row.lip.to_string(),
            row.edit_calls.to_string(),
            row.answers.join("|"),
        ])
        .context("writing per_question.csv")?;
    }
    w.flush().context("writing per_question.csv")?;
    Ok(r)
}
