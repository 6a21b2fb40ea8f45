//! Okapi BM25 over the relation vocabulary of an environment.
//!
//! Each relation id is one document. Its tokens come from splitting the id on
//! schema separators (`.`, `_`, `/`, and any other non-alphanumeric char) and
//! lowercasing; an optional alias string (for instance from the names table)
//! is tokenized the same way and appended. No stemming.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::IndexError;
use crate::kg::KnowledgeGraph;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRelation {
    pub relation: String,
    pub score: f64,
}

/// Top-k candidate schema relations for one natural-language relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRelation {
    pub nl_relation: String,
    pub candidates: Vec<ScoredRelation>,
}

impl BoundRelation {
    pub fn relation_ids(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.relation.as_str())
    }
}

/// Hook for a second retriever (e.g. a dense encoder) layered over the
/// lexical candidates. Implementations may rescore or drop entries; the
/// index re-sorts and truncates afterwards.
pub trait CandidateScorer: Send + Sync {
    fn rescore(&self, query: &str, candidates: Vec<ScoredRelation>) -> Vec<ScoredRelation>;
}

/// Leaves BM25 scores untouched.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexicalOnly;

impl CandidateScorer for LexicalOnly {
    fn rescore(&self, _query: &str, candidates: Vec<ScoredRelation>) -> Vec<ScoredRelation> {
        candidates
    }
}

#[derive(Clone)]
pub struct RelationIndex {
    vocabulary: Vec<String>,
    ordinals: HashMap<String, u32>,
    postings: HashMap<String, Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    scorer: Arc<dyn CandidateScorer>,
}

impl fmt::Debug for RelationIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelationIndex")
            .field("vocabulary", &self.vocabulary.len())
            .field("terms", &self.postings.len())
            .field("avg_doc_length", &self.avg_doc_length)
            .finish()
    }
}

impl RelationIndex {
    pub fn build<I, S>(relations: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::build_with_aliases(relations.into_iter().map(|r| (r.into(), None::<String>)))
    }

    /// Build over `(relation id, alias text)` pairs. Duplicate ids collapse.
    pub fn build_with_aliases<I, A>(entries: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (String, Option<A>)>,
        A: AsRef<str>,
    {
        let mut docs: Vec<(String, Vec<String>)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (rel, alias) in entries {
            if !seen.insert(rel.clone()) {
                continue;
            }
            let mut tokens = tokenize(&rel);
            if let Some(alias) = alias {
                tokens.extend(tokenize(alias.as_ref()));
            }
            docs.push((rel, tokens));
        }
        if docs.is_empty() {
            return Err(IndexError::EmptyVocabulary);
        }
        docs.sort_by(|a, b| a.0.cmp(&b.0));

        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut vocabulary = Vec::with_capacity(docs.len());
        let mut ordinals = HashMap::with_capacity(docs.len());
        for (ord, (rel, tokens)) in docs.into_iter().enumerate() {
            let ord = ord as u32;
            let mut tf: HashMap<String, u32> = HashMap::new();
            for tok in &tokens {
                *tf.entry(tok.clone()).or_default() += 1;
            }
            for (tok, n) in tf {
                postings.entry(tok).or_default().push((ord, n));
            }
            doc_lengths.push(tokens.len() as u32);
            ordinals.insert(rel.clone(), ord);
            vocabulary.push(rel);
        }
        let avg_doc_length =
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / doc_lengths.len() as f64;
        Ok(Self {
            vocabulary,
            ordinals,
            postings,
            doc_lengths,
            avg_doc_length,
            scorer: Arc::new(LexicalOnly),
        })
    }

    /// Index every predicate of `g`, using its names-table entry (if any) as
    /// alias text.
    pub fn from_graph(g: &KnowledgeGraph) -> Result<Self, IndexError> {
        Self::build_with_aliases(
            g.relations()
                .into_iter()
                .map(|r| (r.to_owned(), g.name_entry(r))),
        )
    }

    pub fn with_scorer(mut self, scorer: Arc<dyn CandidateScorer>) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, relation: &str) -> Option<u32> {
        self.ordinals
            .get(relation)
            .map(|&o| self.doc_lengths[o as usize])
    }

    /// Sorted token set of a relation document.
    pub fn doc_terms(&self, relation: &str) -> BTreeSet<&str> {
        let Some(&ord) = self.ordinals.get(relation) else {
            return BTreeSet::new();
        };
        self.postings
            .iter()
            .filter(|(_, p)| p.iter().any(|&(o, _)| o == ord))
            .map(|(t, _)| t.as_str())
            .collect()
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.vocabulary.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 scores for every document with at least one matching token.
    fn scores(&self, query: &str) -> HashMap<u32, f64> {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for tok in tokenize(query) {
            let Some(list) = self.postings.get(&tok) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(ord, tf) in list {
                let tf = f64::from(tf);
                let len = f64::from(self.doc_lengths[ord as usize]);
                let norm = BM25_K1 * (1.0 - BM25_B + BM25_B * len / self.avg_doc_length);
                *acc.entry(ord).or_default() += idf * tf * (BM25_K1 + 1.0) / (tf + norm);
            }
        }
        acc
    }

    /// BM25 score of one relation against `query`; 0 when nothing overlaps.
    pub fn score(&self, query: &str, relation: &str) -> f64 {
        self.ordinals
            .get(relation)
            .and_then(|o| self.scores(query).get(o).copied())
            .unwrap_or(0.0)
    }

    /// Top-`k` relations for a natural-language relation. Zero-score
    /// relations never appear, so the list may be shorter than `k` or empty.
    pub fn bind_relation(&self, nl_relation: &str, k: usize) -> BoundRelation {
        let candidates: Vec<ScoredRelation> = self
            .scores(nl_relation)
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(ord, score)| ScoredRelation {
                relation: self.vocabulary[ord as usize].clone(),
                score,
            })
            .collect();
        let mut candidates = self.scorer.rescore(nl_relation, candidates);
        sort_scored(&mut candidates);
        candidates.truncate(k);
        BoundRelation {
            nl_relation: nl_relation.to_owned(),
            candidates,
        }
    }

    /// Rank `pool` against `question` and keep the top `k`. Unlike
    /// [`bind_relation`](Self::bind_relation), zero-score members are kept.
    pub fn rank_by_question<'a, I>(&self, question: &str, pool: I, k: usize) -> Vec<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let scores = self.scores(question);
        let pool: BTreeSet<&str> = pool.into_iter().collect();
        let mut ranked: Vec<ScoredRelation> = pool
            .into_iter()
            .map(|rel| ScoredRelation {
                relation: rel.to_owned(),
                score: self
                    .ordinals
                    .get(rel)
                    .and_then(|o| scores.get(o).copied())
                    .unwrap_or(0.0),
            })
            .collect();
        sort_scored(&mut ranked);
        ranked.truncate(k);
        ranked.into_iter().map(|s| s.relation).collect()
    }
}

/// Score descending, then relation id ascending.
fn sort_scored(items: &mut [ScoredRelation]) {
    items.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.relation.cmp(&b.relation))
    });
}
