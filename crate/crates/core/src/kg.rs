//! In-memory knowledge graph: a set of triples with a forward adjacency
//! index, display names, and compound (CVT) node flags.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::KgError;

/// One `(subject, predicate, object)` edge. Objects may be entity ids or
/// literals; both are plain strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }
}

/// Immutable graph environment. Only forward edges are indexed.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: BTreeSet<Triple>,
    names: HashMap<String, String>,
    compound: HashSet<String>,
    out_index: HashMap<String, BTreeMap<String, BTreeSet<String>>>,
}

static EMPTY_TARGETS: BTreeSet<String> = BTreeSet::new();

impl KnowledgeGraph {
    /// Build a graph from in-memory parts.
    ///
    /// With `compound = None`, every unnamed id that has outgoing edges is a
    /// compound node; unnamed leaves are treated as literals. An explicit
    /// compound list keeps only ids that are unnamed and occur in some triple.
    pub fn from_parts(
        triples: impl IntoIterator<Item = Triple>,
        names: HashMap<String, String>,
        compound: Option<HashSet<String>>,
    ) -> Self {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let mut out_index: HashMap<String, BTreeMap<String, BTreeSet<String>>> = HashMap::new();
        let mut mentioned: HashSet<&str> = HashSet::new();
        for t in &triples {
            out_index
                .entry(t.subject.clone())
                .or_default()
                .entry(t.predicate.clone())
                .or_default()
                .insert(t.object.clone());
            mentioned.insert(&t.subject);
            mentioned.insert(&t.object);
        }
        let compound = match compound {
            Some(ids) => ids
                .into_iter()
                .filter(|id| !names.contains_key(id) && mentioned.contains(id.as_str()))
                .collect(),
            None => out_index
                .keys()
                .filter(|id| !names.contains_key(*id))
                .cloned()
                .collect(),
        };
        Self {
            triples,
            names,
            compound,
            out_index,
        }
    }

    /// Load `triples.tsv`, an optional `names.tsv`, and an optional compound
    /// id list.
    pub fn load(
        triples_path: &Path,
        names_path: Option<&Path>,
        compound_path: Option<&Path>,
    ) -> Result<Self, KgError> {
        let triples = parse_triples(&read(triples_path)?, triples_path)?;
        let names = match names_path {
            Some(p) => parse_names(&read(p)?, p)?,
            None => HashMap::new(),
        };
        let compound = compound_path
            .map(|p| {
                read(p).map(|text| {
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(str::to_owned)
                        .collect::<HashSet<_>>()
                })
            })
            .transpose()?;
        Ok(Self::from_parts(triples, names, compound))
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains_entity(&self, id: &str) -> bool {
        self.out_index.contains_key(id) || self.triples.iter().any(|t| t.object == id)
    }

    /// Predicates leaving `entity`, in sorted order.
    pub fn out_relations(&self, entity: &str) -> BTreeSet<&str> {
        self.out_index
            .get(entity)
            .map(|rels| rels.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn successors(&self, entity: &str, relation: &str) -> &BTreeSet<String> {
        self.out_index
            .get(entity)
            .and_then(|rels| rels.get(relation))
            .unwrap_or(&EMPTY_TARGETS)
    }

    pub fn has_edge(&self, entity: &str, relation: &str) -> bool {
        !self.successors(entity, relation).is_empty()
    }

    /// Display name, falling back to the raw id. Compound nodes are unnamed
    /// and therefore keep their id.
    pub fn friendly_name<'a>(&'a self, id: &'a str) -> &'a str {
        self.names.get(id).map(String::as_str).unwrap_or(id)
    }

    /// Raw names-table lookup, used for relation aliases.
    pub fn name_entry(&self, id: &str) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn is_compound(&self, id: &str) -> bool {
        self.compound.contains(id)
    }

    pub fn compound_ids(&self) -> impl Iterator<Item = &str> {
        self.compound.iter().map(String::as_str)
    }

    /// All predicates in the graph.
    pub fn relations(&self) -> BTreeSet<&str> {
        self.triples.iter().map(|t| t.predicate.as_str()).collect()
    }

    /// Serialize back to the `triples.tsv` format, sorted.
    pub fn dump_triples(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            let _ = writeln!(out, "{}\t{}\t{}", t.subject, t.predicate, t.object);
        }
        out
    }
}

fn read(path: &Path) -> Result<String, KgError> {
    fs::read_to_string(path).map_err(|source| KgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_triples(text: &str, path: &Path) -> Result<Vec<Triple>, KgError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 || cols[0].is_empty() || cols[1].is_empty() {
            return Err(KgError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        out.push(Triple::new(cols[0], cols[1], cols[2]));
    }
    Ok(out)
}

fn parse_names(text: &str, path: &Path) -> Result<HashMap<String, String>, KgError> {
    let mut names: HashMap<String, String> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, name)) = line.split_once('\t') else {
            return Err(KgError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                reason: "expected id<TAB>name".into(),
            });
        };
        if let Some(prev) = names.get(id) {
            if prev != name {
                return Err(KgError::ConflictingName {
                    path: PathBuf::from(path),
                    line: i + 1,
                    id: id.to_owned(),
                });
            }
            continue;
        }
        names.insert(id.to_owned(), name.to_owned());
    }
    Ok(names)
}
