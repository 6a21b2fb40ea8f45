//! The generate → instantiate → edit loop for KGQA, feedback assembly, and
//! evidence merging.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::error::UsageError;
use crate::gateway::{Gateway, GatewayCall, RoleName};
use crate::instantiate::{
    has_error, instantiate_path, ConstraintOutcome, ErrorReason, InstantiatorConfig,
};
use crate::kg::{KnowledgeGraph, Triple};
use crate::path::{parse_reasoning_path, Constraint, ReasoningPath};
use crate::reasoner::{parse_kg_answer, serialize_evidence};
use crate::relation_index::RelationIndex;

pub const DEFAULT_TEMPERATURE: f64 = 0.3;
/// Edit budget for multi-hop datasets.
pub const MULTI_HOP_MAX_EDIT: usize = 4;
/// Edit budget for simple datasets.
pub const SIMPLE_MAX_EDIT: usize = 2;

const COMPOUND_LABEL: &str = "compound node";
/// Upper bound on DFS steps when sampling halfway-done instances.
const SAMPLE_VISIT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub max_edit_time: usize,
    pub instantiator: InstantiatorConfig,
    pub temperature: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_edit_time: MULTI_HOP_MAX_EDIT,
            instantiator: InstantiatorConfig::default(),
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

/// Error message handed to the editor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorFeedback {
    pub reason_lines: Vec<String>,
    pub halfway_instances: Vec<String>,
    pub candidate_relations: Vec<String>,
}

impl ErrorFeedback {
    pub fn render(&self) -> String {
        let mut out = String::from("Error Message\n");
        for (i, line) in self.reason_lines.iter().enumerate() {
            let _ = writeln!(out, "{}. {}", i + 1, line);
        }
        out.push_str("Instantiation Context\n");
        if self.halfway_instances.is_empty() {
            out.push_str("Instantiate Paths: none\n");
        } else {
            for inst in &self.halfway_instances {
                let _ = writeln!(out, "Instantiate Paths: {inst}");
            }
        }
        out.push_str("Candidate Relations\n");
        let quoted: Vec<String> = self
            .candidate_relations
            .iter()
            .map(|r| format!("'{r}'"))
            .collect();
        let _ = write!(out, "[{}]", quoted.join(", "));
        out
    }
}

/// Answer candidates (frontier intersection) plus every traversed triple.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MergedEvidence {
    pub answer_candidates: BTreeSet<String>,
    pub evidence_triples: BTreeSet<Triple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub path: ReasoningPath,
    pub outcomes: Vec<ConstraintOutcome>,
    /// Present when this iteration triggered an edit call.
    pub feedback: Option<ErrorFeedback>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub id: String,
    pub question: String,
    pub topic_entities: Vec<String>,
    pub iterations: Vec<Iteration>,
    pub edit_calls: usize,
    pub merged: MergedEvidence,
    pub answers: Vec<String>,
    /// Every gateway exchange, in call order.
    pub calls: Vec<GatewayCall>,
    /// Gateway failure that cut the session short.
    pub error: Option<String>,
}

impl SessionTrace {
    pub fn final_iteration(&self) -> Option<&Iteration> {
        self.iterations.last()
    }
}

fn display_entity(g: &KnowledgeGraph, id: &str) -> String {
    if g.is_compound(id) {
        COMPOUND_LABEL.to_owned()
    } else {
        g.friendly_name(id).to_owned()
    }
}

/// Up to `k` distinct rendered chains `e0 --r1--> e1 --r2--> e2 …` through the
/// outcome's instance triples, compound nodes collapsed to one label.
fn sample_instances(o: &ConstraintOutcome, g: &KnowledgeGraph, k: usize) -> Vec<String> {
    let rels: Vec<&str> = o
        .instantiated_relations
        .iter()
        .map(|r| r.bound.as_str())
        .collect();
    if rels.is_empty() {
        return Vec::new();
    }
    let mut adjacency: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for t in &o.instance_triples {
        adjacency
            .entry((t.subject.as_str(), t.predicate.as_str()))
            .or_default()
            .push(t.object.as_str());
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut visits = 0usize;
    let mut stack: Vec<(usize, &str, String)> =
        vec![(0, o.start.as_str(), display_entity(g, &o.start))];
    while let Some((depth, entity, rendered)) = stack.pop() {
        visits += 1;
        if visits > SAMPLE_VISIT_LIMIT || out.len() >= k {
            break;
        }
        if depth == rels.len() {
            if seen.insert(rendered.clone()) {
                out.push(rendered);
            }
            continue;
        }
        let rel = rels[depth];
        if let Some(next) = adjacency.get(&(entity, rel)) {
            // reversed so the smallest id is explored first
            for obj in next.iter().rev() {
                let step = format!("{rendered} --{rel}--> {}", display_entity(g, obj));
                stack.push((depth + 1, obj, step));
            }
        }
    }
    out
}

fn reason_line(o: &ConstraintOutcome, g: &KnowledgeGraph) -> Option<String> {
    let err = o.error.as_ref()?;
    let who = g.friendly_name(&o.start);
    Some(match err.reason {
        ErrorReason::CompoundEnding => format!("path from \"{who}\": <compound node> in the end."),
        ErrorReason::EmptyPath => format!("path from \"{who}\": empty reasoning path."),
        ErrorReason::IrrelevantRelation => format!(
            "path from \"{who}\": relation \"{}\" not instantiated.",
            err.r_err.as_deref().unwrap_or_default()
        ),
    })
}

/// Collect reasons, sampled halfway-done instances, and relations around
/// every stuck entity, for all erroring constraints in order.
pub fn assemble_feedback(
    outcomes: &[ConstraintOutcome],
    question: &str,
    g: &KnowledgeGraph,
    idx: &RelationIndex,
    cfg: &InstantiatorConfig,
) -> Result<ErrorFeedback, UsageError> {
    if !has_error(outcomes) {
        return Err(UsageError::NoError);
    }
    let cfg = cfg.sanitized();
    let mut fb = ErrorFeedback::default();
    let mut pool: BTreeSet<&str> = BTreeSet::new();
    for o in outcomes.iter().filter(|o| o.error.is_some()) {
        fb.reason_lines.extend(reason_line(o, g));
        fb.halfway_instances
            .extend(sample_instances(o, g, cfg.instance_sample_k));
        for e in &o.error.as_ref().expect("filtered").e_err_set {
            pool.extend(g.out_relations(e));
        }
    }
    fb.candidate_relations = idx.rank_by_question(question, pool, cfg.candidate_filter_k);
    Ok(fb)
}

fn intersect_all<'a>(mut sets: impl Iterator<Item = &'a BTreeSet<String>>) -> BTreeSet<String> {
    let Some(first) = sets.next() else {
        return BTreeSet::new();
    };
    sets.fold(first.clone(), |acc, s| acc.intersection(s).cloned().collect())
}

/// Intersect the frontiers of successful constraints. With no successful
/// constraint, intersect the frontiers of the longest instantiated prefixes
/// instead. Evidence is the union of all traversed triples.
pub fn merge_results(outcomes: &[ConstraintOutcome]) -> MergedEvidence {
    let evidence_triples = outcomes
        .iter()
        .flat_map(|o| o.instance_triples.iter().cloned())
        .collect();
    let answer_candidates = if outcomes.iter().any(ConstraintOutcome::is_success) {
        intersect_all(outcomes.iter().filter(|o| o.is_success()).map(|o| &o.frontier))
    } else {
        intersect_all(
            outcomes
                .iter()
                .filter(|o| !o.instantiated_relations.is_empty())
                .map(|o| &o.frontier),
        )
    };
    MergedEvidence {
        answer_candidates,
        evidence_triples,
    }
}

/// Candidates shown to the reasoner: the merged intersection, or the union of
/// successful frontiers when that intersection is empty.
pub fn reasoner_candidates(merged: &MergedEvidence, outcomes: &[ConstraintOutcome]) -> BTreeSet<String> {
    if !merged.answer_candidates.is_empty() {
        return merged.answer_candidates.clone();
    }
    outcomes
        .iter()
        .filter(|o| o.is_success())
        .flat_map(|o| o.frontier.iter().cloned())
        .collect()
}

fn knowledge_slot(merged: &MergedEvidence, outcomes: &[ConstraintOutcome], g: &KnowledgeGraph) -> String {
    let rendering = serialize_evidence(merged, g);
    let mut text = if rendering.lines.is_empty() {
        "none".to_owned()
    } else {
        rendering.text()
    };
    let pool = reasoner_candidates(merged, outcomes);
    let candidates: Vec<&str> = pool
        .iter()
        .filter(|c| !g.is_compound(c))
        .map(|c| g.friendly_name(c))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !candidates.is_empty() {
        let _ = write!(text, "\nCandidate Answers: [{}]", candidates.join(", "));
    }
    text
}

fn quoted_list<S: AsRef<str>>(items: &[S]) -> String {
    let q: Vec<String> = items.iter().map(|s| format!("\"{}\"", s.as_ref())).collect();
    format!("[{}]", q.join(", "))
}

/// Parse model text into a path whose starts are entity ids. The model sees
/// display names, so parsing keys on those.
fn parse_for_entities(text: &str, ids: &[String], names: &[String]) -> ReasoningPath {
    match parse_reasoning_path(text, names) {
        Ok(parsed) => ReasoningPath::new(
            parsed
                .constraints
                .into_iter()
                .zip(ids)
                .map(|(c, id)| Constraint {
                    start: id.clone(),
                    nl_relations: c.nl_relations,
                })
                .collect(),
        ),
        Err(_) => ReasoningPath::empty_for(ids),
    }
}

fn display_path(path: &ReasoningPath, g: &KnowledgeGraph) -> ReasoningPath {
    ReasoningPath {
        question_id: path.question_id.clone(),
        constraints: path
            .constraints
            .iter()
            .map(|c| Constraint {
                start: g.friendly_name(&c.start).to_owned(),
                nl_relations: c.nl_relations.clone(),
            })
            .collect(),
    }
}

/// Run one question end to end. Gateway failures end the session early
/// with `error` set and no answers.
pub fn run_session(
    id: &str,
    question: &str,
    topic_entities: &[String],
    g: &KnowledgeGraph,
    idx: &RelationIndex,
    gateway: &Gateway<'_>,
    cfg: &SessionConfig,
) -> Result<SessionTrace, UsageError> {
    if topic_entities.is_empty() {
        return Err(UsageError::NoTopicEntities);
    }
    let names: Vec<String> = topic_entities
        .iter()
        .map(|e| g.friendly_name(e).to_owned())
        .collect();
    let mut trace = SessionTrace {
        id: id.to_owned(),
        question: question.to_owned(),
        topic_entities: topic_entities.to_vec(),
        iterations: Vec::new(),
        edit_calls: 0,
        merged: MergedEvidence::default(),
        answers: Vec::new(),
        calls: Vec::new(),
        error: None,
    };

    let slots = BTreeMap::from([
        ("question", question.to_owned()),
        ("topic_entities", quoted_list(&names)),
    ]);
    let mut path = match gateway.call(RoleName::KgGenerate, &slots) {
        Ok(text) => parse_for_entities(&text, topic_entities, &names).with_question_id(id),
        Err(e) => {
            trace.error = Some(e.to_string());
            trace.calls = gateway.take_calls();
            return Ok(trace);
        }
    };

    loop {
        let outcomes = instantiate_path(&path, g, idx, &cfg.instantiator);
        if !has_error(&outcomes) || trace.edit_calls >= cfg.max_edit_time {
            trace.iterations.push(Iteration {
                path,
                outcomes,
                feedback: None,
            });
            break;
        }
        let feedback = assemble_feedback(&outcomes, question, g, idx, &cfg.instantiator)
            .expect("outcomes carry an error");
        let slots = BTreeMap::from([
            ("question", question.to_owned()),
            (
                "initial_path",
                display_path(&path, g)
                    .to_prompt_text()
                    .trim_start_matches("Path: ")
                    .to_owned(),
            ),
            ("feedback", feedback.render()),
        ]);
        trace.iterations.push(Iteration {
            path,
            outcomes,
            feedback: Some(feedback),
        });
        debug!(id, edit = trace.edit_calls + 1, "editing reasoning path");
        match gateway.call(RoleName::KgEdit, &slots) {
            Ok(text) => {
                path = parse_for_entities(&text, topic_entities, &names).with_question_id(id);
                trace.edit_calls += 1;
            }
            Err(e) => {
                trace.error = Some(e.to_string());
                break;
            }
        }
    }

    let last = &trace.iterations.last().expect("at least one iteration").outcomes;
    trace.merged = merge_results(last);
    if trace.error.is_none() {
        let slots = BTreeMap::from([
            ("question", question.to_owned()),
            ("knowledge", knowledge_slot(&trace.merged, last, g)),
        ]);
        match gateway.call(RoleName::KgReason, &slots) {
            Ok(text) => trace.answers = parse_kg_answer(&text),
            Err(e) => trace.error = Some(e.to_string()),
        }
    }
    trace.calls = gateway.take_calls();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::{instantiate_constraint, InstantiatedRelation, InstantiationError};

    fn outcome(start: &str, frontier: &[&str], ok: bool) -> ConstraintOutcome {
        ConstraintOutcome {
            constraint_index: 0,
            start: start.into(),
            nl_relations: vec!["r".into()],
            instantiated_relations: vec![InstantiatedRelation {
                nl: "r".into(),
                bound: "x.r".into(),
            }],
            frontier: frontier.iter().map(|s| s.to_string()).collect(),
            instance_triples: frontier.iter().map(|f| Triple::new(start, "x.r", *f)).collect(),
            error: (!ok).then(|| InstantiationError {
                reason: ErrorReason::CompoundEnding,
                err_position: None,
                r_err: None,
                e_err_set: frontier.iter().map(|s| s.to_string()).collect(),
            }),
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merge_intersects_successful_frontiers() {
        let m = merge_results(&[
            outcome("France", &["Germany", "Belgium", "Spain"], true),
            outcome("Nijmegen", &["Germany"], true),
        ]);
        assert_eq!(m.answer_candidates, set(&["Germany"]));
        assert_eq!(m.evidence_triples.len(), 4);

        let single = merge_results(&[outcome("a", &["x", "y"], true)]);
        assert_eq!(single.answer_candidates, set(&["x", "y"]));

        let disjoint = [outcome("a", &["A"], true), outcome("b", &["B"], true)];
        let m = merge_results(&disjoint);
        assert!(m.answer_candidates.is_empty());
        assert_eq!(reasoner_candidates(&m, &disjoint), set(&["A", "B"]));
    }

    #[test]
    fn merge_ignores_failed_when_some_succeed_and_falls_back_otherwise() {
        let m = merge_results(&[outcome("a", &["x", "y"], true), outcome("b", &["z"], false)]);
        assert_eq!(m.answer_candidates, set(&["x", "y"]));

        let m = merge_results(&[outcome("a", &["x", "y"], false), outcome("b", &["y"], false)]);
        assert_eq!(m.answer_candidates, set(&["y"]));

        assert_eq!(merge_results(&[]), MergedEvidence::default());
    }

    #[test]
    fn feedback_requires_an_error() {
        let g = KnowledgeGraph::default();
        let idx = RelationIndex::build(["a.b"]).unwrap();
        let ok = [outcome("a", &["x"], true)];
        assert_eq!(
            assemble_feedback(&ok, "q", &g, &idx, &InstantiatorConfig::default()),
            Err(UsageError::NoError)
        );
    }

    #[test]
    fn feedback_candidates_capped_for_high_degree_entity() {
        let triples: Vec<Triple> = (0..40)
            .map(|i| Triple::new("hub", format!("synthetic.rel_{i:02}"), format!("n{i}")))
            .collect();
        let names = std::iter::once("hub".to_owned())
            .chain((0..40).map(|i| format!("n{i}")))
            .map(|n| (n.clone(), n))
            .collect();
        let g = KnowledgeGraph::from_parts(triples, names, None);
        let idx = RelationIndex::from_graph(&g).unwrap();
        let cfg = InstantiatorConfig::default();
        let o = instantiate_constraint(&Constraint::new("hub", ["zzz"]), 0, &g, &idx, &cfg);
        let fb = assemble_feedback(&[o], "which rel 13 or 27", &g, &idx, &cfg).unwrap();
        assert_eq!(fb.candidate_relations.len(), 35);
        assert_eq!(fb.candidate_relations[..2], ["synthetic.rel_13", "synthetic.rel_27"]);
        assert!(fb.halfway_instances.is_empty());
        assert_eq!(fb.reason_lines, ["path from \"hub\": relation \"zzz\" not instantiated."]);
    }

    #[test]
    fn instance_sampling_dedupes_compound_nodes() {
        let mut triples: Vec<Triple> = (0..10)
            .map(|i| Triple::new("France", "location.location.adjoin", format!("cvt{i}")))
            .collect();
        triples.extend((0..10).map(|i| Triple::new(format!("cvt{i}"), "x.country", format!("c{i}"))));
        let mut names: std::collections::HashMap<String, String> =
            (0..10).map(|i| (format!("c{i}"), format!("C{i}"))).collect();
        names.insert("France".into(), "France".into());
        let g = KnowledgeGraph::from_parts(triples, names, None);
        let idx = RelationIndex::from_graph(&g).unwrap();
        let cfg = InstantiatorConfig::default();

        let o = instantiate_constraint(&Constraint::new("France", ["adjoin"]), 0, &g, &idx, &cfg);
        assert_eq!(
            sample_instances(&o, &g, 3),
            ["France --location.location.adjoin--> compound node"]
        );
        let o = instantiate_constraint(&Constraint::new("France", ["adjoin", "country"]), 0, &g, &idx, &cfg);
        assert_eq!(
            sample_instances(&o, &g, 3),
            [
                "France --location.location.adjoin--> compound node --x.country--> C0",
                "France --location.location.adjoin--> compound node --x.country--> C1",
                "France --location.location.adjoin--> compound node --x.country--> C2",
            ]
        );
    }
}
