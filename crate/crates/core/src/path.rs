//! Reasoning paths: one linear chain of natural-language relations per topic
//! entity, parsed leniently from model output.

use serde::{Deserialize, Serialize};

use crate::error::PathParseError;

/// Relations hanging off one topic entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub start: String,
    #[serde(rename = "relations")]
    pub nl_relations: Vec<String>,
}

impl Constraint {
    pub fn new<I, S>(start: impl Into<String>, relations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            start: start.into(),
            nl_relations: relations.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty(start: impl Into<String>) -> Self {
        Self {
            start: start.into(),
            nl_relations: Vec::new(),
        }
    }
}

/// This is also the `path.json` debug format.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReasoningPath {
    #[serde(default)]
    pub question_id: String,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLengths {
    pub lpp: usize,
    pub per_constraint: Vec<usize>,
}

impl ReasoningPath {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self {
            question_id: String::new(),
            constraints,
        }
    }

    pub fn with_question_id(mut self, id: impl Into<String>) -> Self {
        self.question_id = id.into();
        self
    }

    /// A path with no relations for any entity.
    pub fn empty_for<S: AsRef<str>>(entities: &[S]) -> Self {
        Self::new(entities.iter().map(|e| Constraint::empty(e.as_ref())).collect())
    }

    pub fn lengths(&self) -> PathLengths {
        let per_constraint: Vec<usize> =
            self.constraints.iter().map(|c| c.nl_relations.len()).collect();
        PathLengths {
            lpp: per_constraint.iter().sum(),
            per_constraint,
        }
    }

    /// Model-facing text form, e.g.
    /// `Path: {"France": [France → border], "Nijmegen": [Nijmegen → serve_airport → contain]}`.
    pub fn to_prompt_text(&self) -> String {
        let body: Vec<String> = self
            .constraints
            .iter()
            .map(|c| {
                let chain: Vec<&str> = std::iter::once(c.start.as_str())
                    .chain(c.nl_relations.iter().map(String::as_str))
                    .collect();
                format!("\"{}\": [{}]", c.start, chain.join(" → "))
            })
            .collect();
        format!("Path: {{{}}}", body.join(", "))
    }
}

const PATH_MARKER: &str = "Path:";
const QUOTES: &[char] = &['"', '\'', '“', '”', '‘', '’', '`'];

/// Parse the last `Path:` block of `text`, producing one constraint per
/// topic entity in the given order. Entities missing from the block get an
/// empty constraint.
pub fn parse_reasoning_path<S: AsRef<str>>(
    text: &str,
    topic_entities: &[S],
) -> Result<ReasoningPath, PathParseError> {
    let start = text
        .rfind(PATH_MARKER)
        .ok_or(PathParseError::MissingPathBlock)?;
    let block = &text[start + PATH_MARKER.len()..];

    let constraints = topic_entities
        .iter()
        .map(|e| {
            let entity = e.as_ref();
            let relations = keyed_chain(block, entity)
                .or_else(|| bare_chain(block, entity))
                .unwrap_or_default();
            Constraint {
                start: entity.to_owned(),
                nl_relations: relations,
            }
        })
        .collect();
    Ok(ReasoningPath::new(constraints))
}

/// `"entity": [entity → r1 → r2]`
fn keyed_chain(block: &str, entity: &str) -> Option<Vec<String>> {
    if entity.is_empty() {
        return None;
    }
    let mut from = 0;
    while let Some(off) = block[from..].find(entity) {
        let at = from + off;
        let end = at + entity.len();
        from = at + entity.chars().next().map_or(1, char::len_utf8);

        let open_quote = block[..at].chars().next_back();
        let close_quote = block[end..].chars().next();
        if !matches!(open_quote, Some(c) if QUOTES.contains(&c))
            || !matches!(close_quote, Some(c) if QUOTES.contains(&c))
        {
            continue;
        }
        let rest = &block[end + close_quote.map_or(0, char::len_utf8)..];
        let rest = rest.trim_start();
        let Some(rest) = rest.strip_prefix(':') else {
            continue;
        };
        let rest = rest.trim_start();
        let Some(rest) = rest.strip_prefix('[') else {
            continue;
        };
        let inner = rest.find(']').map_or(rest, |close| &rest[..close]);
        return Some(split_chain(inner, entity));
    }
    None
}

/// `entity → r1 → r2` on a line of its own, as in a bare "Final Path:" line.
fn bare_chain(block: &str, entity: &str) -> Option<Vec<String>> {
    block.lines().find_map(|line| {
        let line = line.trim().trim_start_matches('{').trim_end_matches('}');
        if !(line.contains("->") || line.contains('→')) {
            return None;
        }
        let first = line
            .split(['→'])
            .flat_map(|p| p.split("->"))
            .next()?
            .trim()
            .trim_matches(QUOTES);
        same_entity(first, entity).then(|| split_chain(line, entity))
    })
}

fn same_entity(token: &str, entity: &str) -> bool {
    token.trim().eq_ignore_ascii_case(entity.trim())
}

fn split_chain(inner: &str, entity: &str) -> Vec<String> {
    let mut parts: Vec<&str> = inner
        .split('→')
        .flat_map(|p| p.split("->"))
        .map(|p| p.trim().trim_matches(QUOTES).trim())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.first().is_some_and(|p| same_entity(p, entity)) {
        parts.remove(0);
    }
    parts.into_iter().map(str::to_owned).collect()
}
