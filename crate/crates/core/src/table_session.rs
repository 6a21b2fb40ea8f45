//! The generate → instantiate → edit loop over a single table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayCall, RoleName};
use crate::reasoner::parse_table_answer;
use crate::table::{
    assemble_table_feedback, describe_table, instantiate_table, parse_table_path, RowSampler,
    Table, TableError, TableItems, TablePath,
};

/// Edit budget for table questions.
pub const TABLE_MAX_EDIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSessionConfig {
    pub max_edit_time: usize,
    pub sampler: RowSampler,
}

impl Default for TableSessionConfig {
    fn default() -> Self {
        Self {
            max_edit_time: TABLE_MAX_EDIT,
            sampler: RowSampler::First,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableIteration {
    pub path: TablePath,
    pub error: Option<TableError>,
    pub feedback: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSessionTrace {
    pub id: String,
    pub question: String,
    pub table_id: String,
    pub iterations: Vec<TableIteration>,
    pub edit_calls: usize,
    /// What the reasoner saw. The whole table when the final path still had
    /// a column error.
    pub items: TableItems,
    pub answers: Vec<String>,
    pub calls: Vec<GatewayCall>,
    pub error: Option<String>,
}

pub fn run_table_session(
    id: &str,
    question: &str,
    table: &Table,
    gateway: &Gateway<'_>,
    cfg: &TableSessionConfig,
) -> TableSessionTrace {
    let mut trace = TableSessionTrace {
        id: id.to_owned(),
        question: question.to_owned(),
        table_id: table.table_id.clone(),
        iterations: Vec::new(),
        edit_calls: 0,
        items: TableItems::default(),
        answers: Vec::new(),
        calls: Vec::new(),
        error: None,
    };
    let description = describe_table(table, cfg.sampler);

    let slots = BTreeMap::from([
        ("question", question.to_owned()),
        ("table", description.clone()),
    ]);
    let mut path = match gateway.call(RoleName::TableGenerate, &slots) {
        Ok(text) => parse_table_path(&text),
        Err(e) => {
            trace.error = Some(e.to_string());
            trace.calls = gateway.take_calls();
            return trace;
        }
    };

    let items = loop {
        let outcome = instantiate_table(&path, table);
        let Some(err) = outcome.error.clone() else {
            trace.iterations.push(TableIteration {
                path,
                error: None,
                feedback: None,
            });
            break outcome.items;
        };
        if trace.edit_calls >= cfg.max_edit_time {
            trace.iterations.push(TableIteration {
                path,
                error: Some(err),
                feedback: None,
            });
            break TableItems::full(table);
        }
        let feedback = assemble_table_feedback(&err, table, cfg.sampler);
        let slots = BTreeMap::from([
            ("question", question.to_owned()),
            ("table", description.clone()),
            ("wrong_answer", path.to_prompt_text()),
            ("feedback", feedback.clone()),
        ]);
        trace.iterations.push(TableIteration {
            path,
            error: Some(err),
            feedback: Some(feedback),
        });
        match gateway.call(RoleName::TableEdit, &slots) {
            Ok(text) => {
                path = parse_table_path(&text);
                trace.edit_calls += 1;
            }
            Err(e) => {
                trace.error = Some(e.to_string());
                break TableItems::full(table);
            }
        }
    };
    trace.items = items;

    if trace.error.is_none() {
        let slots = BTreeMap::from([
            ("question", question.to_owned()),
            ("items", trace.items.render()),
        ]);
        match gateway.call(RoleName::TableReason, &slots) {
            Ok(text) => trace.answers = parse_table_answer(&text),
            Err(e) => trace.error = Some(e.to_string()),
        }
    }
    trace.calls = gateway.take_calls();
    trace
}
