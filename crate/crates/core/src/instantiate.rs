//! Grounding a reasoning path on a knowledge graph: relation binding followed
//! by a level-by-level breadth-first walk from each topic entity.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::kg::{KnowledgeGraph, Triple};
use crate::path::{Constraint, ReasoningPath};
use crate::relation_index::RelationIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstantiatorConfig {
    /// Candidates retrieved per natural-language relation.
    pub bind_k: usize,
    /// Maximum frontier size kept after each hop.
    pub queue_threshold: usize,
    /// Candidate relations offered in edit feedback.
    pub candidate_filter_k: usize,
    /// Halfway-done instances sampled into edit feedback.
    pub instance_sample_k: usize,
}

impl Default for InstantiatorConfig {
    fn default() -> Self {
        Self {
            bind_k: 5,
            queue_threshold: 1000,
            candidate_filter_k: 35,
            instance_sample_k: 3,
        }
    }
}

impl InstantiatorConfig {
    /// Clamp every knob to at least 1.
    pub fn sanitized(self) -> Self {
        Self {
            bind_k: self.bind_k.max(1),
            queue_threshold: self.queue_threshold.max(1),
            candidate_filter_k: self.candidate_filter_k.max(1),
            instance_sample_k: self.instance_sample_k.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorReason {
    /// No bound candidate of the relation connects to the current frontier.
    IrrelevantRelation,
    EmptyPath,
    /// Every entity reached by the full path is a compound node.
    CompoundEnding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantiationError {
    pub reason: ErrorReason,
    /// Index of the failing relation; `None` for compound endings.
    pub err_position: Option<usize>,
    pub r_err: Option<String>,
    /// Entities where instantiation stopped.
    pub e_err_set: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantiatedRelation {
    pub nl: String,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintOutcome {
    pub constraint_index: usize,
    pub start: String,
    pub nl_relations: Vec<String>,
    pub instantiated_relations: Vec<InstantiatedRelation>,
    pub frontier: BTreeSet<String>,
    pub instance_triples: BTreeSet<Triple>,
    pub error: Option<InstantiationError>,
}

impl ConstraintOutcome {
    pub fn is_success(&self) -> bool {
        self.error.is_none()
    }

    pub fn reason(&self) -> Option<ErrorReason> {
        self.error.as_ref().map(|e| e.reason)
    }
}

/// Walk one constraint. Each hop binds the relation, picks the first
/// candidate (in rank order) that leaves any frontier entity, and moves the
/// frontier along that single relation.
pub fn instantiate_constraint(
    constraint: &Constraint,
    index: usize,
    g: &KnowledgeGraph,
    idx: &RelationIndex,
    cfg: &InstantiatorConfig,
) -> ConstraintOutcome {
    let cfg = cfg.sanitized();
    let mut outcome = ConstraintOutcome {
        constraint_index: index,
        start: constraint.start.clone(),
        nl_relations: constraint.nl_relations.clone(),
        instantiated_relations: Vec::new(),
        frontier: BTreeSet::new(),
        instance_triples: BTreeSet::new(),
        error: None,
    };
    let seed: BTreeSet<String> = BTreeSet::from([constraint.start.clone()]);

    if constraint.nl_relations.is_empty() {
        outcome.error = Some(InstantiationError {
            reason: ErrorReason::EmptyPath,
            err_position: Some(0),
            r_err: None,
            e_err_set: seed,
        });
        return outcome;
    }

    let mut frontier = seed;
    for (pos, nl) in constraint.nl_relations.iter().enumerate() {
        let bound = idx.bind_relation(nl, cfg.bind_k);
        let chosen = bound
            .relation_ids()
            .find(|rel| frontier.iter().any(|e| g.has_edge(e, rel)));
        let Some(rel) = chosen else {
            outcome.error = Some(InstantiationError {
                reason: ErrorReason::IrrelevantRelation,
                err_position: Some(pos),
                r_err: Some(nl.clone()),
                e_err_set: frontier.clone(),
            });
            outcome.frontier = if pos == 0 { BTreeSet::new() } else { frontier };
            return outcome;
        };

        let mut next: BTreeSet<String> = BTreeSet::new();
        for e in &frontier {
            next.extend(g.successors(e, rel).iter().cloned());
        }
        // BTreeSet iterates in id order: keep the smallest ids.
        let next: BTreeSet<String> = next.into_iter().take(cfg.queue_threshold).collect();
        for e in &frontier {
            for o in g.successors(e, rel) {
                if next.contains(o) {
                    outcome
                        .instance_triples
                        .insert(Triple::new(e.as_str(), rel, o.as_str()));
                }
            }
        }
        outcome.instantiated_relations.push(InstantiatedRelation {
            nl: nl.clone(),
            bound: rel.to_owned(),
        });
        frontier = next;
    }

    if frontier.iter().all(|e| g.is_compound(e)) {
        outcome.error = Some(InstantiationError {
            reason: ErrorReason::CompoundEnding,
            err_position: None,
            r_err: None,
            e_err_set: frontier.clone(),
        });
    }
    outcome.frontier = frontier;
    outcome
}

pub fn instantiate_path(
    path: &ReasoningPath,
    g: &KnowledgeGraph,
    idx: &RelationIndex,
    cfg: &InstantiatorConfig,
) -> Vec<ConstraintOutcome> {
    path.constraints
        .iter()
        .enumerate()
        .map(|(i, c)| instantiate_constraint(c, i, g, idx, cfg))
        .collect()
}

pub fn has_error(outcomes: &[ConstraintOutcome]) -> bool {
    outcomes.iter().any(|o| o.error.is_some())
}
