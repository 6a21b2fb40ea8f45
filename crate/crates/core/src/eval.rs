//! Answer matching and aggregate metrics over session traces.
//!
//! Normalization: lowercase, trim surrounding punctuation, collapse internal
//! whitespace, drop one leading article (`the`, `a`, `an`).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::ReportError;
use crate::instantiate::ErrorReason;
use crate::kg::KnowledgeGraph;
use crate::session::{Iteration, SessionTrace};
use crate::table_session::TableSessionTrace;
use crate::trace::{GoldRecord, TraceRecord};

pub fn normalize_answer(s: &str) -> String {
    let strip = |s: &str| -> String {
        s.trim_matches(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '%' && c != '$') || c.is_ascii_control())
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    };
    let s = strip(&s.to_lowercase());
    let s = ["the ", "a ", "an "]
        .iter()
        .find_map(|a| s.strip_prefix(a))
        .map_or(s.clone(), str::to_owned);
    strip(&s)
}

/// Any normalized prediction equals any normalized gold answer.
pub fn hit_at_1<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G]) -> bool {
    let gold: BTreeSet<String> = gold.iter().map(|g| normalize_answer(g.as_ref())).collect();
    predicted
        .iter()
        .any(|p| gold.contains(&normalize_answer(p.as_ref())))
}

/// Normalized prediction set equals the normalized gold set.
pub fn denotation_accuracy<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G]) -> bool {
    let p: BTreeSet<String> = predicted.iter().map(|x| normalize_answer(x.as_ref())).collect();
    let g: BTreeSet<String> = gold.iter().map(|x| normalize_answer(x.as_ref())).collect();
    p == g
}

/// Some gold answer names an entity that occurs in the merged evidence.
pub fn answer_coverage<G: AsRef<str>>(trace: &SessionTrace, gold: &[G], g: &KnowledgeGraph) -> bool {
    let gold: BTreeSet<String> = gold.iter().map(|x| normalize_answer(x.as_ref())).collect();
    trace.merged.evidence_triples.iter().any(|t| {
        [&t.subject, &t.object]
            .into_iter()
            .any(|e| gold.contains(&normalize_answer(g.friendly_name(e))))
    })
}

/// Some gold answer equals a cell shown to the reasoner.
pub fn table_answer_coverage<G: AsRef<str>>(trace: &TableSessionTrace, gold: &[G]) -> bool {
    let gold: BTreeSet<String> = gold.iter().map(|x| normalize_answer(x.as_ref())).collect();
    trace
        .items
        .rows
        .iter()
        .flatten()
        .any(|c| gold.contains(&normalize_answer(c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathMetrics {
    /// Mean predicted path length.
    pub lpp: f64,
    /// Mean instantiated path length.
    pub lip: f64,
    /// Mean per-question instantiation progress.
    pub aip: f64,
    /// Fraction of questions with a fully instantiated, non-empty path.
    pub isr: f64,
    /// Fraction of questions with at least one compound-ending constraint.
    pub cer: f64,
    /// Fraction of constraints that end on compound nodes.
    pub cer_per_constraint: f64,
}

/// Which iteration of each session the path metrics look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationChoice {
    Initial,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct PathCounts {
    lpp: usize,
    lip: usize,
    constraints: usize,
    compound_endings: usize,
}

fn path_counts(it: Option<&Iteration>) -> PathCounts {
    let Some(it) = it else {
        return PathCounts::default();
    };
    PathCounts {
        lpp: it.outcomes.iter().map(|o| o.nl_relations.len()).sum(),
        lip: it.outcomes.iter().map(|o| o.instantiated_relations.len()).sum(),
        constraints: it.outcomes.len(),
        compound_endings: it
            .outcomes
            .iter()
            .filter(|o| o.reason() == Some(ErrorReason::CompoundEnding))
            .count(),
    }
}

fn pick(trace: &SessionTrace, which: IterationChoice) -> Option<&Iteration> {
    match which {
        IterationChoice::Initial => trace.iterations.first(),
        IterationChoice::Final => trace.iterations.last(),
    }
}

pub fn path_metrics(traces: &[&SessionTrace], which: IterationChoice) -> PathMetrics {
    if traces.is_empty() {
        return PathMetrics::default();
    }
    let n = traces.len() as f64;
    let mut m = PathMetrics::default();
    let mut constraints = 0usize;
    let mut compound_constraints = 0usize;
    for t in traces {
        let c = path_counts(pick(t, which));
        m.lpp += c.lpp as f64;
        m.lip += c.lip as f64;
        if c.lpp > 0 {
            m.aip += c.lip as f64 / c.lpp as f64;
            if c.lip == c.lpp {
                m.isr += 1.0;
            }
        }
        if c.compound_endings > 0 {
            m.cer += 1.0;
        }
        constraints += c.constraints;
        compound_constraints += c.compound_endings;
    }
    m.lpp /= n;
    m.lip /= n;
    m.aip /= n;
    m.isr /= n;
    m.cer /= n;
    if constraints > 0 {
        m.cer_per_constraint = compound_constraints as f64 / constraints as f64;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionMetrics {
    pub id: String,
    pub hit_at_1: bool,
    pub denotation_accuracy: bool,
    pub answer_coverage: bool,
    pub retrieved_knowledge: usize,
    pub lpp: usize,
    pub lip: usize,
    pub edit_calls: usize,
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_questions: usize,
    pub hit_at_1: f64,
    pub denotation_accuracy: f64,
    pub answer_coverage: f64,
    /// Mean number of distinct evidence triples per KGQA question.
    pub avg_rk: f64,
    pub lpp: f64,
    pub lip: f64,
    pub aip: f64,
    pub isr: f64,
    pub cer: f64,
    pub cer_per_constraint: f64,
    /// The same path metrics on each session's first iteration.
    pub initial_path: PathMetrics,
    /// Edit calls → fraction of questions.
    pub edit_call_histogram: BTreeMap<usize, f64>,
}

fn align<'a>(
    traces: &'a [TraceRecord],
    gold: &'a [GoldRecord],
) -> Result<Vec<(&'a TraceRecord, &'a GoldRecord)>, ReportError> {
    let by_id: HashMap<&str, &GoldRecord> = gold.iter().map(|g| (g.id.as_str(), g)).collect();
    let traced: BTreeSet<&str> = traces.iter().map(TraceRecord::id).collect();
    let traces_without_gold: Vec<String> = traces
        .iter()
        .map(TraceRecord::id)
        .filter(|id| !by_id.contains_key(id))
        .map(str::to_owned)
        .collect();
    let gold_without_traces: Vec<String> = gold
        .iter()
        .map(|g| g.id.as_str())
        .filter(|id| !traced.contains(id))
        .map(str::to_owned)
        .collect();
    if !traces_without_gold.is_empty() || !gold_without_traces.is_empty() {
        return Err(ReportError::Misaligned {
            traces_without_gold,
            gold_without_traces,
        });
    }
    Ok(traces.iter().map(|t| (t, by_id[t.id()])).collect())
}

pub fn per_question(
    traces: &[TraceRecord],
    gold: &[GoldRecord],
    g: &KnowledgeGraph,
) -> Result<Vec<QuestionMetrics>, ReportError> {
    Ok(align(traces, gold)?
        .into_iter()
        .map(|(t, gold)| {
            let (coverage, rk, counts) = match t {
                TraceRecord::Kg(s) => (
                    answer_coverage(s, &gold.answers, g),
                    s.merged.evidence_triples.len(),
                    path_counts(s.final_iteration()),
                ),
                TraceRecord::Table(s) => (
                    table_answer_coverage(s, &gold.answers),
                    0,
                    PathCounts::default(),
                ),
            };
            QuestionMetrics {
                id: t.id().to_owned(),
                hit_at_1: hit_at_1(t.answers(), &gold.answers),
                denotation_accuracy: denotation_accuracy(t.answers(), &gold.answers),
                answer_coverage: coverage,
                retrieved_knowledge: rk,
                lpp: counts.lpp,
                lip: counts.lip,
                edit_calls: t.edit_calls(),
                answers: t.answers().to_vec(),
            }
        })
        .collect())
}

/// Aggregate every metric. Fails if trace and gold ids do not line up.
pub fn build_report(
    traces: &[TraceRecord],
    gold: &[GoldRecord],
    g: &KnowledgeGraph,
) -> Result<MetricsReport, ReportError> {
    let rows = per_question(traces, gold, g)?;
    if rows.is_empty() {
        return Ok(MetricsReport::default());
    }
    let n = rows.len() as f64;
    let frac = |f: &dyn Fn(&QuestionMetrics) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / n;

    let kg: Vec<&SessionTrace> = traces
        .iter()
        .filter_map(|t| match t {
            TraceRecord::Kg(s) => Some(s),
            TraceRecord::Table(_) => None,
        })
        .collect();
    let final_paths = path_metrics(&kg, IterationChoice::Final);
    let avg_rk = if kg.is_empty() {
        0.0
    } else {
        kg.iter()
            .map(|s| s.merged.evidence_triples.len() as f64)
            .sum::<f64>()
            / kg.len() as f64
    };

    let mut histogram: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &rows {
        *histogram.entry(r.edit_calls).or_default() += 1.0;
    }
    histogram.values_mut().for_each(|v| *v /= n);

    Ok(MetricsReport {
        n_questions: rows.len(),
        hit_at_1: frac(&|r| r.hit_at_1),
        denotation_accuracy: frac(&|r| r.denotation_accuracy),
        answer_coverage: frac(&|r| r.answer_coverage),
        avg_rk,
        lpp: final_paths.lpp,
        lip: final_paths.lip,
        aip: final_paths.aip,
        isr: final_paths.isr,
        cer: final_paths.cer,
        cer_per_constraint: final_paths.cer_per_constraint,
        initial_path: path_metrics(&kg, IterationChoice::Initial),
        edit_call_histogram: histogram,
    })
}
