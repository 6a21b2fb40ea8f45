//! Table environment: the table model, column/row reasoning paths, their
//! instantiation, and editor feedback for column errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::TableLoadError;
use crate::reasoner::parse_loose_list;

/// Minimum number of columns a table path must select.
pub const MIN_COLUMNS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub table_id: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(
        table_id: impl Into<String>,
        headers: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self, TableLoadError> {
        let t = Self {
            table_id: table_id.into(),
            headers,
            rows,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, TableLoadError> {
        let text = fs::read_to_string(path).map_err(|source| TableLoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let t: Table = serde_json::from_str(&text).map_err(|source| TableLoadError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), TableLoadError> {
        let mut seen = std::collections::HashSet::new();
        for h in &self.headers {
            if !seen.insert(h.trim()) {
                return Err(TableLoadError::DuplicateHeader(h.clone()));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.headers.len() {
                return Err(TableLoadError::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: self.headers.len(),
                });
            }
        }
        Ok(())
    }

    /// Column index for a header, ignoring case and surrounding whitespace.
    pub fn column(&self, header: &str) -> Option<usize> {
        self.headers.iter().position(|h| loose_eq(h, header))
    }
}

fn loose_eq(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

/// How the feedback and table descriptions pick their one example row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowSampler {
    #[default]
    First,
    Seeded(u64),
}

impl RowSampler {
    pub fn pick<'t>(&self, t: &'t Table) -> Option<&'t [String]> {
        match *self {
            _ if t.rows.is_empty() => None,
            RowSampler::First => t.rows.first().map(Vec::as_slice),
            RowSampler::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Some(&t.rows[rng.gen_range(0..t.rows.len())])
            }
        }
    }
}

/// Markdown header plus one sample row, for generation and editing prompts.
pub fn describe_table(t: &Table, sampler: RowSampler) -> String {
    let mut out = format!("| {} |\n", t.headers.join(" | "));
    let _ = writeln!(out, "|{}", " -- |".repeat(t.headers.len()));
    if let Some(row) = sampler.pick(t) {
        let _ = write!(out, "| {} |", row.join(" | "));
    }
    out.trim_end().to_owned()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TablePath {
    pub chosen_headers: Vec<String>,
    /// Header → accepted cell values. Keys need not be among the chosen
    /// headers; unknown keys are reported as irrelevant columns.
    pub constraints: BTreeMap<String, Vec<String>>,
}

impl TablePath {
    pub fn to_prompt_text(&self) -> String {
        let headers = serde_json::to_string(&self.chosen_headers).expect("strings serialize");
        let constraints: Vec<String> = self
            .constraints
            .iter()
            .map(|(k, v)| {
                format!(
                    "{}: {}",
                    serde_json::to_string(k).expect("strings serialize"),
                    serde_json::to_string(v).expect("strings serialize")
                )
            })
            .collect();
        format!(
            "Chosen Headers: {}\nConstrains: {{{}}}",
            headers.replace("\",\"", "\", \""),
            constraints.join(", ")
        )
    }
}

const HEADERS_MARKER: &str = "Chosen Headers:";
const CONSTRAINT_MARKERS: [&str; 2] = ["Constrains:", "Constraints:"];

/// Lenient parse of the last `Chosen Headers:` list and the last
/// `Constrains:` mapping. Never fails; anything missing comes back empty.
pub fn parse_table_path(text: &str) -> TablePath {
    let chosen_headers = text
        .rfind(HEADERS_MARKER)
        .map(|i| {
            let rest = &text[i + HEADERS_MARKER.len()..];
            let line = rest.lines().next().unwrap_or_default();
            parse_loose_list(line)
        })
        .unwrap_or_default();

    let constraints = CONSTRAINT_MARKERS
        .iter()
        .filter_map(|m| text.rfind(m).map(|i| i + m.len()))
        .max()
        .map(|i| parse_loose_dict(&text[i..]))
        .unwrap_or_default();

    TablePath {
        chosen_headers,
        constraints,
    }
}

/// `{"k": ["a", 'b'], k2: v}` → {k: [a, b], k2: [v]}. Entries with no values
/// are dropped.
fn parse_loose_dict(text: &str) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    let Some(open) = text.find('{') else {
        return out;
    };
    let chars: Vec<char> = text[open + 1..].chars().collect();
    let mut i = 0;

    let skip = |i: &mut usize, pred: &dyn Fn(char) -> bool| {
        while *i < chars.len() && pred(chars[*i]) {
            *i += 1;
        }
    };
    loop {
        skip(&mut i, &|c| c.is_whitespace() || c == ',');
        if i >= chars.len() || chars[i] == '}' {
            break;
        }
        // key
        let key: String = if chars[i] == '"' || chars[i] == '\'' {
            let q = chars[i];
            let start = i + 1;
            i = start;
            skip(&mut i, &|c| c != q);
            let k = chars[start..i.min(chars.len())].iter().collect();
            i += 1;
            k
        } else {
            let start = i;
            skip(&mut i, &|c| c != ':' && c != '}' && c != '\n');
            chars[start..i].iter().collect::<String>().trim().to_owned()
        };
        skip(&mut i, &char::is_whitespace);
        if i >= chars.len() || chars[i] != ':' {
            break;
        }
        i += 1;
        skip(&mut i, &char::is_whitespace);
        if i >= chars.len() {
            break;
        }
        let values = if chars[i] == '[' {
            let start = i;
            let mut quote: Option<char> = None;
            while i < chars.len() {
                match (quote, chars[i]) {
                    (None, '\'' | '"') => quote = Some(chars[i]),
                    (Some(q), c) if c == q => {
                        let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                        if matches!(next, None | Some(',' | ']')) {
                            quote = None;
                        }
                    }
                    (None, ']') => break,
                    _ => {}
                }
                i += 1;
            }
            let list: String = chars[start..(i + 1).min(chars.len())].iter().collect();
            i += 1;
            parse_loose_list(&list)
        } else {
            let start = i;
            skip(&mut i, &|c| c != ',' && c != '}' && c != '\n');
            parse_loose_list(&chars[start..i].iter().collect::<String>())
        };
        let key = key.trim().to_owned();
        if !key.is_empty() && !values.is_empty() {
            out.insert(key, values);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableErrorReason {
    IrrelevantColumn,
    InsufficientColumns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableError {
    pub reason: TableErrorReason,
    pub bad_headers: Vec<String>,
}

/// Projected, row-filtered view of a table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TableItems {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// False when constraints matched no row and every row was kept.
    pub constraints_matched: bool,
}

impl TableItems {
    pub fn full(t: &Table) -> Self {
        Self {
            headers: t.headers.clone(),
            rows: t.rows.clone(),
            constraints_matched: true,
        }
    }

    /// `Headers: a, b` then `item N: (a, x); (b, y)` per row.
    pub fn render(&self) -> String {
        let mut out = format!("Headers: {}", self.headers.join(", "));
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = self
                .headers
                .iter()
                .zip(row)
                .map(|(h, c)| format!("({h}, {c})"))
                .collect();
            let _ = write!(out, "\nitem {}: {}", i + 1, cells.join("; "));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableOutcome {
    pub items: TableItems,
    pub error: Option<TableError>,
}

/// Columns first, then rows. A column problem stops instantiation; rows that
/// match nothing are not an error and leave every row in place.
pub fn instantiate_table(p: &TablePath, t: &Table) -> TableOutcome {
    let mut columns: Vec<usize> = Vec::new();
    let mut bad: Vec<String> = Vec::new();
    let note_bad = |h: &str, bad: &mut Vec<String>| {
        if !bad.iter().any(|b| loose_eq(b, h)) {
            bad.push(h.trim().to_owned());
        }
    };
    for h in &p.chosen_headers {
        match t.column(h) {
            Some(c) if !columns.contains(&c) => columns.push(c),
            Some(_) => {}
            None => note_bad(h, &mut bad),
        }
    }
    let mut filters: Vec<(usize, &[String])> = Vec::new();
    for (k, values) in &p.constraints {
        match t.column(k) {
            Some(c) => filters.push((c, values)),
            None => note_bad(k, &mut bad),
        }
    }

    let error = if !bad.is_empty() {
        Some(TableError {
            reason: TableErrorReason::IrrelevantColumn,
            bad_headers: bad,
        })
    } else if columns.len() < MIN_COLUMNS {
        Some(TableError {
            reason: TableErrorReason::InsufficientColumns,
            bad_headers: Vec::new(),
        })
    } else {
        None
    };
    if error.is_some() {
        return TableOutcome {
            items: TableItems::default(),
            error,
        };
    }

    let matching: Vec<&Vec<String>> = t
        .rows
        .iter()
        .filter(|row| {
            filters
                .iter()
                .all(|(c, values)| values.iter().any(|v| loose_eq(&row[*c], v)))
        })
        .collect();
    let constraints_matched = !matching.is_empty() || t.rows.is_empty();
    let kept: Vec<&Vec<String>> = if constraints_matched {
        matching
    } else {
        t.rows.iter().collect()
    };
    TableOutcome {
        items: TableItems {
            headers: columns.iter().map(|&c| t.headers[c].clone()).collect(),
            rows: kept
                .into_iter()
                .map(|row| columns.iter().map(|&c| row[c].clone()).collect())
                .collect(),
            constraints_matched,
        },
        error: None,
    }
}

/// Numbered reason line, the full header list, and one sample row.
pub fn assemble_table_feedback(err: &TableError, t: &Table, sampler: RowSampler) -> String {
    let header_list = serde_json::to_string(&t.headers)
        .expect("strings serialize")
        .replace("\",\"", "\", \"");
    let mut out = match err.reason {
        TableErrorReason::IrrelevantColumn => {
            let bad: Vec<String> = err.bad_headers.iter().map(|h| format!("'{h}'")).collect();
            format!(
                "1. Header [{}] not in candidate Headers. You can only choose headers from {header_list}.",
                bad.join(", ")
            )
        }
        TableErrorReason::InsufficientColumns => format!(
            "1. Chosen headers contain less than two columns. You should choose at least {MIN_COLUMNS} headers from {header_list}."
        ),
    };
    if let Some(row) = sampler.pick(t) {
        let _ = write!(out, "\nSample Row: | {} |", row.join(" | "));
    }
    out
}
