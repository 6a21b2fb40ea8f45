#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use readi::gateway::TranscriptFile;
use readi::path::Constraint;
use readi::{
    ErrorReason, Gateway, InstantiatorConfig, KnowledgeGraph, RelationIndex, RoleName,
    RoleProfile, SessionConfig, SessionTrace, Table, Transcript, Triple,
};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn nijmegen() -> (KnowledgeGraph, RelationIndex) {
    let g = KnowledgeGraph::load(
        &fixture("nijmegen.tsv"),
        Some(&fixture("nijmegen_names.tsv")),
        None,
    )
    .expect("nijmegen fixture loads");
    let idx = RelationIndex::from_graph(&g).expect("nijmegen has relations");
    (g, idx)
}

pub const NIJMEGEN_QUESTION: &str = "What country bordering France contains an airport that serves Nijmegen?";

pub fn nijmegen_topics() -> Vec<String> {
    vec!["France".into(), "Nijmegen".into()]
}

pub fn nijmegen_transcript() -> Transcript {
    let text = std::fs::read_to_string(fixture("nijmegen_transcript.json")).unwrap();
    let file: TranscriptFile = serde_json::from_str(&text).unwrap();
    Transcript::from_file(&file)
}

pub fn lakes() -> Table {
    Table::load(&fixture("turkish-lakes.json")).expect("lakes fixture loads")
}

pub fn gold(id: &str, answers: &[&str]) -> readi::GoldRecord {
    readi::GoldRecord {
        id: id.into(),
        question: String::new(),
        topic_entities: Vec::new(),
        table_id: None,
        answers: answers.iter().map(|a| a.to_string()).collect(),
    }
}

pub fn run_nijmegen(cfg: &SessionConfig) -> SessionTrace {
    let (g, idx) = nijmegen();
    let backend = nijmegen_transcript();
    let gw = Gateway::new(&backend, RoleProfile::default(), cfg.temperature);
    readi::run_session("nijmegen", NIJMEGEN_QUESTION, &nijmegen_topics(), &g, &idx, &gw, cfg).unwrap()
}

/// Run one session on `g` with a scripted backend built from the given
/// responses.
pub fn scripted_session(
    id: &str,
    question: &str,
    topics: &[&str],
    g: &KnowledgeGraph,
    idx: &RelationIndex,
    responses: &[(RoleName, &str)],
    max_edit_time: usize,
) -> SessionTrace {
    let backend = responses
        .iter()
        .fold(Transcript::new(true), |t, (r, s)| t.push(*r, *s));
    let gw = Gateway::new(&backend, RoleProfile::default(), 0.3);
    let cfg = SessionConfig {
        max_edit_time,
        ..SessionConfig::default()
    };
    let topics: Vec<String> = topics.iter().map(|t| t.to_string()).collect();
    readi::run_session(id, question, &topics, g, idx, &gw, &cfg).unwrap()
}

// ---------------------------------------------------------------------------
// brute-force instantiation oracle

#[derive(Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub bound: Vec<String>,
    pub frontier: BTreeSet<String>,
    pub triples: BTreeSet<Triple>,
    pub reason: Option<ErrorReason>,
    pub err_position: Option<usize>,
}

/// Same first-match rule as the instantiator, but every lookup is a linear
/// scan over the whole triple list.
pub fn oracle_instantiate(
    triples: &[Triple],
    compound: &BTreeSet<String>,
    idx: &RelationIndex,
    c: &Constraint,
    cfg: &InstantiatorConfig,
) -> OracleOutcome {
    let mut out = OracleOutcome {
        bound: Vec::new(),
        frontier: BTreeSet::new(),
        triples: BTreeSet::new(),
        reason: None,
        err_position: None,
    };
    if c.nl_relations.is_empty() {
        out.reason = Some(ErrorReason::EmptyPath);
        out.err_position = Some(0);
        return out;
    }
    let mut frontier = BTreeSet::from([c.start.clone()]);
    for (pos, nl) in c.nl_relations.iter().enumerate() {
        let ranked = idx.bind_relation(nl, cfg.bind_k.max(1));
        let chosen = ranked.candidates.iter().map(|s| s.relation.clone()).find(|r| {
            triples
                .iter()
                .any(|t| &t.predicate == r && frontier.contains(&t.subject))
        });
        let Some(rel) = chosen else {
            out.reason = Some(ErrorReason::IrrelevantRelation);
            out.err_position = Some(pos);
            if pos > 0 {
                out.frontier = frontier;
            }
            return out;
        };
        let mut reached: Vec<String> = triples
            .iter()
            .filter(|t| t.predicate == rel && frontier.contains(&t.subject))
            .map(|t| t.object.clone())
            .collect();
        reached.sort();
        reached.dedup();
        reached.truncate(cfg.queue_threshold.max(1));
        let next: BTreeSet<String> = reached.into_iter().collect();
        for t in triples {
            if t.predicate == rel && frontier.contains(&t.subject) && next.contains(&t.object) {
                out.triples.insert(t.clone());
            }
        }
        out.bound.push(rel);
        frontier = next;
    }
    if frontier.iter().all(|e| compound.contains(e)) {
        out.reason = Some(ErrorReason::CompoundEnding);
    }
    out.frontier = frontier;
    out
}

const WORDS: [&str; 12] = [
    "border", "capital", "river", "airport", "language", "founder", "member", "author",
    "country", "city", "team", "league",
];

pub struct RandomCase {
    pub triples: Vec<Triple>,
    pub named: BTreeSet<String>,
    pub graph: KnowledgeGraph,
    pub index: RelationIndex,
    pub constraints: Vec<Constraint>,
    pub cfg: InstantiatorConfig,
}

/// A random graph of at most 50 entities and 10 relations, plus a handful of
/// random constraints of length at most 4.
pub fn random_case(rng: &mut ChaCha8Rng) -> RandomCase {
    let n_entities = rng.gen_range(2..=50);
    let n_relations = rng.gen_range(1..=10);
    let entities: Vec<String> = (0..n_entities).map(|i| format!("e{i:02}")).collect();
    let relations: Vec<String> = (0..n_relations)
        .map(|i| {
            let a = WORDS.choose(rng).unwrap();
            let b = WORDS.choose(rng).unwrap();
            format!("d{}.{a}_{b}_{i}", i % 3)
        })
        .collect();
    let n_triples = rng.gen_range(1..=n_entities * 3);
    let mut triples: Vec<Triple> = (0..n_triples)
        .map(|_| {
            Triple::new(
                entities.choose(rng).unwrap().as_str(),
                relations.choose(rng).unwrap().as_str(),
                entities.choose(rng).unwrap().as_str(),
            )
        })
        .collect();
    triples.sort();
    triples.dedup();

    let names: HashMap<String, String> = entities
        .iter()
        .filter(|_| rng.gen_bool(0.7))
        .map(|e| (e.clone(), format!("name of {e}")))
        .collect();
    let named = names.keys().cloned().collect();
    let graph = KnowledgeGraph::from_parts(triples.iter().cloned(), names, None);
    let index = RelationIndex::from_graph(&graph).expect("at least one triple");

    let constraints = (0..5)
        .map(|_| {
            let len = rng.gen_range(0..=4);
            let rels: Vec<String> = (0..len)
                .map(|_| match rng.gen_range(0..4) {
                    0 => "nothing here".to_owned(),
                    1 => WORDS.choose(rng).unwrap().to_string(),
                    _ => format!("{} {}", WORDS.choose(rng).unwrap(), WORDS.choose(rng).unwrap()),
                })
                .collect();
            Constraint::new(entities.choose(rng).unwrap().as_str(), rels)
        })
        .collect();
    let cfg = InstantiatorConfig {
        bind_k: rng.gen_range(1..=5),
        queue_threshold: if rng.gen_bool(0.3) { rng.gen_range(1..=4) } else { 1000 },
        ..InstantiatorConfig::default()
    };
    RandomCase {
        triples,
        named,
        graph,
        index,
        constraints,
        cfg,
    }
}

/// Returns (graphs checked, constraints checked) or the first mismatch.
pub fn check_bfs_oracle(n_graphs: usize, seed: u64) -> Result<(usize, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for gi in 0..n_graphs {
        let case = random_case(&mut rng);
        // unnamed ids with an outgoing edge, found by scanning
        let compound: BTreeSet<String> = case
            .triples
            .iter()
            .map(|t| t.subject.clone())
            .filter(|s| !case.named.contains(s))
            .collect();
        for (ci, c) in case.constraints.iter().enumerate() {
            let got = readi::instantiate_constraint(c, ci, &case.graph, &case.index, &case.cfg);
            let want = oracle_instantiate(&case.triples, &compound, &case.index, c, &case.cfg);
            let got_bound: Vec<String> = got
                .instantiated_relations
                .iter()
                .map(|r| r.bound.clone())
                .collect();
            let got_view = OracleOutcome {
                bound: got_bound,
                frontier: got.frontier.clone(),
                triples: got.instance_triples.clone(),
                reason: got.reason(),
                err_position: got.error.as_ref().and_then(|e| e.err_position),
            };
            if got_view != want {
                return Err(format!(
                    "graph {gi}, constraint {ci} ({c:?}): got {got_view:?}, oracle {want:?}"
                ));
            }
            checked += 1;
        }
    }
    Ok((n_graphs, checked))
}

// ---------------------------------------------------------------------------
// edit-budget sweep suite

pub const SWEEP_QUESTIONS: usize = 20;

/// Topic `t{j}` reaches answer `Answer {j}` through one relation. The initial
/// path uses an unbindable relation; the scripted editor needs `1 + j % 4`
/// edits before producing the right one.
pub fn sweep_graph() -> (KnowledgeGraph, RelationIndex) {
    let mut names = HashMap::new();
    let triples: Vec<Triple> = (0..SWEEP_QUESTIONS)
        .map(|j| {
            names.insert(format!("t{j}"), format!("Topic {j}"));
            names.insert(format!("a{j}"), format!("Answer {j}"));
            Triple::new(format!("t{j}"), "sweep.answer_of", format!("a{j}"))
        })
        .collect();
    let g = KnowledgeGraph::from_parts(triples, names, None);
    let idx = RelationIndex::from_graph(&g).unwrap();
    (g, idx)
}

pub fn sweep_edits_needed(j: usize) -> usize {
    1 + j % 4
}

/// Answer coverage over the sweep suite for one edit budget.
pub fn sweep_coverage(max_edit_time: usize) -> f64 {
    let (g, idx) = sweep_graph();
    let mut covered = 0usize;
    let mut traces = Vec::new();
    let mut golds = Vec::new();
    for j in 0..SWEEP_QUESTIONS {
        let topic = format!("Topic {j}");
        let bad = format!("Path: {{\"{topic}\": [{topic} → unrelated hop]}}");
        let good = format!("Path: {{\"{topic}\": [{topic} → answer of]}}");
        let reason = format!("So, the answer is {{Answer {j}}}.");
        let needed = sweep_edits_needed(j);
        let mut responses: Vec<(RoleName, &str)> = vec![(RoleName::KgGenerate, bad.as_str())];
        for _ in 1..needed {
            responses.push((RoleName::KgEdit, bad.as_str()));
        }
        responses.push((RoleName::KgEdit, good.as_str()));
        responses.push((RoleName::KgReason, reason.as_str()));
        let trace = scripted_session(
            &format!("s{j}"),
            &format!("What is the answer for topic {j}?"),
            &[&format!("t{j}")],
            &g,
            &idx,
            &responses,
            max_edit_time,
        );
        let gold_answers = [format!("Answer {j}")];
        if readi::eval::answer_coverage(&trace, &gold_answers, &g) {
            covered += 1;
        }
        traces.push(readi::TraceRecord::Kg(trace));
        golds.push(gold(&format!("s{j}"), &[&gold_answers[0]]));
    }
    let report = readi::build_report(&traces, &golds, &g).unwrap();
    assert!((report.answer_coverage - covered as f64 / SWEEP_QUESTIONS as f64).abs() < 1e-12);
    report.answer_coverage
}

// ---------------------------------------------------------------------------
// fuzz input

const FRAGMENTS: [&str; 28] = [
    "Path:", "Corrected Path:", "{", "}", "[", "]", "\"France\"", "'Nijmegen'", ":", ",",
    " → ", "->", "border", " ", "\n", "Chosen Headers:", "Constrains:", "Constraints:",
    "Answer:", "\"Depth\"", "'Lake Tuz'", "So, the answer is", "{Germany}", "→", "\"",
    "'", "Gölü", "\t",
];

pub fn fuzz_string(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(0..24);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.15) {
                let len = rng.gen_range(1..6);
                (0..len).map(|_| rng.gen::<char>()).collect()
            } else {
                FRAGMENTS.choose(rng).unwrap().to_string()
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// criterion checks shared by the focused tests and the acceptance target

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn check_nijmegen_end_to_end() -> Check {
    let started = std::time::Instant::now();
    let (g, _) = nijmegen();
    let trace = run_nijmegen(&SessionConfig::default());
    let elapsed = started.elapsed();
    ensure!(trace.error.is_none(), "session error: {:?}", trace.error);
    ensure!(trace.answers == ["Germany"], "answers {:?}", trace.answers);
    ensure!(trace.edit_calls == 1, "edit_calls {}", trace.edit_calls);
    let first = &trace.iterations[0].outcomes;
    ensure!(
        first[0].reason() == Some(ErrorReason::CompoundEnding) && first[1].is_success(),
        "initial outcomes {:?}",
        first.iter().map(|o| o.reason()).collect::<Vec<_>>()
    );
    let report = readi::build_report(
        &[readi::TraceRecord::Kg(trace)],
        &[gold("nijmegen", &["Germany"])],
        &g,
    )
    .map_err(|e| e.to_string())?;
    ensure!(report.hit_at_1 == 1.0, "hit@1 {}", report.hit_at_1);
    ensure!(report.answer_coverage == 1.0, "AC {}", report.answer_coverage);
    ensure!(
        elapsed < std::time::Duration::from_secs(1),
        "took {elapsed:?}"
    );
    Ok(format!("answers [Germany], 1 edit, Hit@1 1.0, AC 1.0, {elapsed:?}"))
}

pub fn check_bfs_oracle_criterion() -> Check {
    let started = std::time::Instant::now();
    let (graphs, constraints) = check_bfs_oracle(250, 0x5eed)?;
    let elapsed = started.elapsed();
    ensure!(elapsed < std::time::Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{graphs} graphs, {constraints} constraints equal, {elapsed:?}"))
}

/// Every fixture must trigger exactly the expected reason and nothing else.
pub fn check_taxonomy() -> Check {
    use readi::table::TableErrorReason;
    let (g, idx) = nijmegen();
    let cfg = InstantiatorConfig::default();
    let kg_cases = [
        (Constraint::new("France", ["quantum chromodynamics"]), ErrorReason::IrrelevantRelation),
        (Constraint::empty("France"), ErrorReason::EmptyPath),
        (Constraint::new("France", ["border"]), ErrorReason::CompoundEnding),
    ];
    let mut seen = BTreeSet::new();
    for (c, want) in &kg_cases {
        let path = readi::ReasoningPath::new(vec![c.clone()]);
        let outcomes = readi::instantiate_path(&path, &g, &idx, &cfg);
        let reasons: Vec<ErrorReason> = outcomes.iter().filter_map(|o| o.reason()).collect();
        ensure!(reasons == [*want], "{c:?}: reasons {reasons:?}, want {want:?}");
        seen.insert(format!("{want:?}"));
    }

    let t = lakes();
    let table_cases = [
        (
            readi::parse_table_path("Chosen Headers: ['Name in English', 'Elevation']\nConstrains: {}"),
            TableErrorReason::IrrelevantColumn,
        ),
        (
            readi::parse_table_path("Chosen Headers: ['Depth']\nConstrains: {}"),
            TableErrorReason::InsufficientColumns,
        ),
    ];
    for (p, want) in &table_cases {
        let out = readi::instantiate_table(p, &t);
        let reason = out.error.as_ref().map(|e| e.reason);
        ensure!(reason == Some(*want), "{p:?}: got {reason:?}, want {want:?}");
        seen.insert(format!("{want:?}"));
    }
    ensure!(seen.len() == 5, "covered {seen:?}");
    Ok(format!("{} reasons, one per fixture", seen.len()))
}

pub fn check_lakes() -> Check {
    let t = lakes();
    let text = std::fs::read_to_string(fixture("lakes_transcript.json")).unwrap();
    let file: TranscriptFile = serde_json::from_str(&text).unwrap();
    let backend = Transcript::from_file(&file);
    let gw = Gateway::new(&backend, RoleProfile::default(), 0.3);
    let trace = readi::run_table_session(
        "lakes",
        "Which is deeper, Lake Tuz or Lake Palas Tuzla?",
        &t,
        &gw,
        &readi::TableSessionConfig::default(),
    );
    let items = &trace.items;
    ensure!(items.headers == ["Name in English", "Depth"], "headers {:?}", items.headers);
    ensure!(items.rows.len() == 2, "rows {:?}", items.rows);
    let depths: Vec<&str> = items.rows.iter().map(|r| r[1].as_str()).collect();
    ensure!(depths == ["2 m", "15 m"], "depths {depths:?}");
    ensure!(trace.edit_calls == 0, "edit_calls {}", trace.edit_calls);
    ensure!(
        readi::denotation_accuracy(&trace.answers, &["Lake Palas Tuzla"]),
        "answers {:?}",
        trace.answers
    );
    Ok("2 rows x 2 columns (2 m, 15 m), DA 1.0".into())
}

pub fn check_sweep() -> Check {
    let started = std::time::Instant::now();
    let curve: Vec<f64> = (0..=4).map(sweep_coverage).collect();
    let elapsed = started.elapsed();
    ensure!(
        curve.windows(2).all(|w| w[0] <= w[1]),
        "AC not monotone: {curve:?}"
    );
    ensure!(curve.windows(2).any(|w| w[0] < w[1]), "AC flat: {curve:?}");
    ensure!(elapsed < std::time::Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("AC over T=0..4: {curve:?}"))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Three sessions on NIJMEGEN:
/// A: full Nijmegen run (4 relations, all grounded, 5 evidence triples, 1 edit);
/// B: the initial path with no edit budget (3 of 3 grounded, France ends on a
///    compound node, 4 evidence triples);
/// C: Belgium → near by → contain (2 predicted, 1 grounded, 1 triple), wrong
///    answer.
pub fn three_trace_fixture() -> (KnowledgeGraph, Vec<readi::TraceRecord>, Vec<readi::GoldRecord>) {
    let (g, idx) = nijmegen();
    let a = {
        let backend = nijmegen_transcript();
        let gw = Gateway::new(&backend, RoleProfile::default(), 0.3);
        readi::run_session("a", NIJMEGEN_QUESTION, &nijmegen_topics(), &g, &idx, &gw, &SessionConfig::default())
            .unwrap()
    };
    let b = scripted_session(
        "b",
        NIJMEGEN_QUESTION,
        &["France", "Nijmegen"],
        &g,
        &idx,
        &[
            (
                RoleName::KgGenerate,
                "Path: {\"France\": [France → border], \"Nijmegen\": [Nijmegen → serve_airport → contain]}",
            ),
            (RoleName::KgReason, "So, the answer is {Germany}."),
        ],
        0,
    );
    let c = scripted_session(
        "c",
        "Which country near Belgium contains Luxembourg City?",
        &["Belgium"],
        &g,
        &idx,
        &[
            (RoleName::KgGenerate, "Path: {\"Belgium\": [Belgium → near by → contain]}"),
            (RoleName::KgReason, "So, the answer is {Netherlands}."),
        ],
        0,
    );
    let traces = vec![
        readi::TraceRecord::Kg(a),
        readi::TraceRecord::Kg(b),
        readi::TraceRecord::Kg(c),
    ];
    let golds = vec![
        gold("a", &["Germany"]),
        gold("b", &["Germany"]),
        gold("c", &["Luxembourg"]),
    ];
    (g, traces, golds)
}

/// A chain e0 → e1 → e2 → e3 → e4; four questions walk three hops, one walks
/// four. Every path grounds completely.
pub fn grounded_fixture() -> (KnowledgeGraph, Vec<readi::TraceRecord>, Vec<readi::GoldRecord>) {
    let hops = ["alpha", "beta", "gamma", "delta"];
    let mut names = HashMap::new();
    let triples: Vec<Triple> = hops
        .iter()
        .enumerate()
        .map(|(i, h)| {
            names.insert(format!("e{i}"), format!("Stop {i}"));
            names.insert(format!("e{}", i + 1), format!("Stop {}", i + 1));
            Triple::new(format!("e{i}"), format!("chain.{h}"), format!("e{}", i + 1))
        })
        .collect();
    let g = KnowledgeGraph::from_parts(triples, names, None);
    let idx = RelationIndex::from_graph(&g).unwrap();
    let mut traces = Vec::new();
    let mut golds = Vec::new();
    for (q, len) in [3usize, 3, 3, 3, 4].into_iter().enumerate() {
        let chain = hops[..len].join(" → ");
        let path = format!("Path: {{\"Stop 0\": [Stop 0 → {chain}]}}");
        let reason = format!("So, the answer is {{Stop {len}}}.");
        let id = format!("g{q}");
        traces.push(readi::TraceRecord::Kg(scripted_session(
            &id,
            "Where does the chain end?",
            &["e0"],
            &g,
            &idx,
            &[(RoleName::KgGenerate, path.as_str()), (RoleName::KgReason, reason.as_str())],
            4,
        )));
        golds.push(gold(&id, &[&format!("Stop {len}")]));
    }
    (g, traces, golds)
}

pub fn check_metrics() -> Check {
    let (g, traces, golds) = three_trace_fixture();
    let r = readi::build_report(&traces, &golds, &g).map_err(|e| e.to_string())?;
    let expect = [
        ("hit_at_1", r.hit_at_1, 2.0 / 3.0),
        ("denotation_accuracy", r.denotation_accuracy, 2.0 / 3.0),
        ("answer_coverage", r.answer_coverage, 2.0 / 3.0),
        ("avg_rk", r.avg_rk, (5.0 + 4.0 + 1.0) / 3.0),
        ("lpp", r.lpp, (4.0 + 3.0 + 2.0) / 3.0),
        ("lip", r.lip, (4.0 + 3.0 + 1.0) / 3.0),
        ("aip", r.aip, (1.0 + 1.0 + 0.5) / 3.0),
        ("isr", r.isr, 2.0 / 3.0),
        ("cer", r.cer, 1.0 / 3.0),
        ("cer_per_constraint", r.cer_per_constraint, 1.0 / 5.0),
        ("histogram[0]", r.edit_call_histogram.get(&0).copied().unwrap_or(0.0), 2.0 / 3.0),
        ("histogram[1]", r.edit_call_histogram.get(&1).copied().unwrap_or(0.0), 1.0 / 3.0),
    ];
    for (name, got, want) in expect {
        ensure!(close(got, want), "{name}: got {got}, want {want}");
    }
    ensure!(r.n_questions == 3, "n_questions {}", r.n_questions);

    let (g, traces, golds) = grounded_fixture();
    let r = readi::build_report(&traces, &golds, &g).map_err(|e| e.to_string())?;
    ensure!(close(r.lpp, 3.2) && close(r.lip, 3.2), "grounded lpp {} lip {}", r.lpp, r.lip);
    ensure!(r.aip == 1.0 && r.isr == 1.0 && r.cer == 0.0, "grounded aip {} isr {} cer {}", r.aip, r.isr, r.cer);
    Ok("3-trace report matches hand values; grounded LPP 3.2, AIP 1, ISR 1, CER 0".into())
}

pub fn check_replay() -> Check {
    let (g, idx) = nijmegen();
    let original = run_nijmegen(&SessionConfig::default());
    let replay_backend = Transcript::from_calls(&original.calls);
    let gw = Gateway::new(&replay_backend, RoleProfile::default(), 0.3);
    let replayed = readi::run_session(
        "nijmegen",
        NIJMEGEN_QUESTION,
        &nijmegen_topics(),
        &g,
        &idx,
        &gw,
        &SessionConfig::default(),
    )
    .map_err(|e| e.to_string())?;

    let golds = [gold("nijmegen", &["Germany"])];
    let mut bytes = Vec::new();
    for t in [original, replayed] {
        let rec = vec![readi::TraceRecord::Kg(t)];
        let mut trace_json = Vec::new();
        readi::trace::write_traces(&mut trace_json, &rec).unwrap();
        let report = readi::build_report(&rec, &golds, &g).map_err(|e| e.to_string())?;
        bytes.push((trace_json, serde_json::to_vec(&report).unwrap()));
    }
    ensure!(bytes[0].0 == bytes[1].0, "trace JSON differs");
    ensure!(bytes[0].1 == bytes[1].1, "report JSON differs");
    Ok(format!("{} trace bytes identical, report identical", bytes[0].0.len()))
}

pub fn check_fuzz(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = ["France", "Nijmegen", ""];
    for i in 0..n {
        let s = fuzz_string(&mut rng);

        match readi::parse_reasoning_path(&s, &entities) {
            Ok(p) => {
                ensure!(s.contains("Path:"), "#{i}: parsed without marker: {s:?}");
                ensure!(p.constraints.len() == entities.len(), "#{i}: arity {s:?}");
                for (c, e) in p.constraints.iter().zip(entities) {
                    ensure!(c.start == e, "#{i}: start {} vs {e}", c.start);
                    for r in &c.nl_relations {
                        ensure!(
                            !r.is_empty() && r.trim() == r && !r.contains('→') && !r.contains("->"),
                            "#{i}: bad relation {r:?} from {s:?}"
                        );
                    }
                }
            }
            Err(_) => ensure!(!s.contains("Path:"), "#{i}: marker present but failed: {s:?}"),
        }

        let tp = readi::parse_table_path(&s);
        for h in &tp.chosen_headers {
            ensure!(!h.is_empty(), "#{i}: empty header from {s:?}");
        }
        for (k, v) in &tp.constraints {
            ensure!(!k.is_empty() && !v.is_empty(), "#{i}: empty constraint {k:?} from {s:?}");
        }

        for a in readi::reasoner::parse_kg_answer(&s) {
            ensure!(
                !a.is_empty() && a.trim() == a && !a.contains(','),
                "#{i}: bad kg answer {a:?} from {s:?}"
            );
        }
        for a in readi::reasoner::parse_table_answer(&s) {
            ensure!(!a.is_empty(), "#{i}: empty table answer from {s:?}");
        }
    }
    Ok(format!("{n} strings, no panics, invariants hold"))
}
