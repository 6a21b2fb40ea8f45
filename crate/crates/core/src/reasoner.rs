//! Evidence rendering for the reasoner prompt and answer extraction from
//! reasoner output.

use serde::{Deserialize, Serialize};

use crate::kg::KnowledgeGraph;
use crate::session::MergedEvidence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceRendering {
    pub lines: Vec<String>,
    pub triple_count: usize,
}

impl EvidenceRendering {
    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

/// One `(subject, relation, object)` line per evidence triple, entities by
/// friendly name, sorted.
pub fn serialize_evidence(merged: &MergedEvidence, g: &KnowledgeGraph) -> EvidenceRendering {
    let mut rows: Vec<(&str, &str, &str)> = merged
        .evidence_triples
        .iter()
        .map(|t| {
            (
                g.friendly_name(&t.subject),
                t.predicate.as_str(),
                g.friendly_name(&t.object),
            )
        })
        .collect();
    rows.sort_unstable();
    EvidenceRendering {
        lines: rows
            .into_iter()
            .map(|(s, p, o)| format!("({s}, {p}, {o})"))
            .collect(),
        triple_count: merged.evidence_triples.len(),
    }
}

/// Comma-separated contents of the last `{…}` span.
pub fn parse_kg_answer(text: &str) -> Vec<String> {
    let Some(close) = text.rfind('}') else {
        return Vec::new();
    };
    let Some(open) = text[..close].rfind('{') else {
        return Vec::new();
    };
    text[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

/// The list on the last line starting with `Answer:`.
pub fn parse_table_answer(text: &str) -> Vec<String> {
    let Some(rest) = text
        .lines()
        .rev()
        .find_map(|l| l.trim_start().strip_prefix("Answer:"))
    else {
        return Vec::new();
    };
    parse_loose_list(rest)
}

/// `['a', "b", c]` → `[a, b, c]`. Quoted items may contain commas and inner
/// apostrophes; a quote only closes an item when followed by `,`, `]`, or
/// the end of input.
pub(crate) fn parse_loose_list(text: &str) -> Vec<String> {
    let s = text.trim();
    let s = s.strip_prefix('[').unwrap_or(s);
    let s = match s.rfind(']') {
        Some(i) => &s[..i],
        None => s,
    };
    let chars: Vec<char> = s.chars().collect();
    let mut items = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        while i < chars.len() && (chars[i].is_whitespace() || chars[i] == ',') {
            i += 1;
        }
        if i >= chars.len() {
            break;
        }
        let q = chars[i];
        if q == '\'' || q == '"' {
            let mut j = i + 1;
            let mut end = None;
            while j < chars.len() {
                if chars[j] == q {
                    let mut k = j + 1;
                    while k < chars.len() && chars[k].is_whitespace() {
                        k += 1;
                    }
                    if k >= chars.len() || chars[k] == ',' || chars[k] == ']' {
                        end = Some(j);
                        break;
                    }
                }
                j += 1;
            }
            match end {
                Some(j) => {
                    let item: String = chars[i + 1..j].iter().collect();
                    if !item.trim().is_empty() {
                        items.push(item);
                    }
                    i = j + 1;
                }
                None => {
                    let item: String = chars[i + 1..].iter().collect();
                    let item = item.trim().to_owned();
                    if !item.is_empty() {
                        items.push(item);
                    }
                    break;
                }
            }
        } else {
            let mut j = i;
            while j < chars.len() && chars[j] != ',' {
                j += 1;
            }
            let item: String = chars[i..j].iter().collect();
            let item = item.trim().to_owned();
            if !item.is_empty() {
                items.push(item);
            }
            i = j;
        }
    }
    items
}
