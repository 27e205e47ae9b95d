//! Record (de)serialization: one JSON object per line.
//!
//! The native format is the project's own: `id`, `claim`, optional `label`,
//! `tables[]` (caption, columns, rows of {label, cells{}}), `paragraphs[]`,
//! plus optional `gold_docs[]`/`retrieved_docs[]` used by open-domain runs.
//! A missing key in a row's `cells` map means an empty cell, which is how
//! section-header rows are written compactly.
//!
//! The scitab format reads the published SciTab release directly: the first
//! entry of every content row is the row label, style markers like `[BOLD]`
//! are stripped, and `[EMPTY]` cells become empty text.

use serde::Deserialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::{Cell, Claim, EvidenceBundle, EvidenceError, LabelScheme, Row, Table, Verdict};

/// Which on-disk shape a record line uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    /// The project's own JSONL shape; labels validated against the scheme.
    Native { scheme: LabelScheme },
    /// The published SciTab JSON shape (always three-way labels).
    SciTab,
}

/// One claim with everything loaded alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub claim: Claim,
    pub evidence: EvidenceBundle,
    /// Corpus doc ids holding the gold evidence (open-domain recall scoring).
    pub gold_docs: Vec<String>,
    /// Corpus doc ids attached by a prior retrieval pass, in rank order.
    pub retrieved_docs: Vec<String>,
}

#[derive(Deserialize)]
struct WireRecord {
    id: String,
    claim: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    tables: Vec<WireTable>,
    #[serde(default)]
    paragraphs: Vec<String>,
    #[serde(default)]
    gold_docs: Vec<String>,
    #[serde(default)]
    retrieved_docs: Vec<String>,
}

#[derive(Deserialize)]
struct WireTable {
    #[serde(default)]
    caption: String,
    columns: Vec<String>,
    rows: Vec<WireRow>,
}

#[derive(Deserialize)]
struct WireRow {
    label: String,
    #[serde(default)]
    cells: Map<String, Value>,
}

#[derive(Deserialize)]
struct WireSciTab {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    table_id: Option<String>,
    #[serde(default)]
    table_caption: String,
    table_column_names: Vec<Value>,
    table_content_values: Vec<Vec<Value>>,
    claim: String,
    label: String,
}

/// Parses one record line under the given format.
pub fn load_record(bytes: &[u8], format: RecordFormat) -> Result<Record, EvidenceError> {
    match format {
        RecordFormat::Native { scheme } => load_native(bytes, scheme),
        RecordFormat::SciTab => load_scitab(bytes),
    }
}

/// Writes a record as one native-format JSON line (no trailing newline).
///
/// Empty cells are omitted from the `cells` map, so serialize-then-load is
/// the identity on the record.
pub fn serialize_record(record: &Record) -> Vec<u8> {
    let tables: Vec<Value> = record
        .evidence
        .tables
        .iter()
        .map(|t| {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| {
                    let mut cells = Map::new();
                    for (col, cell) in t.columns.iter().zip(&r.cells) {
                        if !cell.text.is_empty() {
                            cells.insert(col.clone(), Value::String(cell.text.clone()));
                        }
                    }
                    json!({ "label": r.label, "cells": cells })
                })
                .collect();
            json!({ "caption": t.caption, "columns": t.columns, "rows": rows })
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("id".into(), Value::String(record.claim.id.clone()));
    obj.insert("claim".into(), Value::String(record.claim.text.clone()));
    if let Some(label) = record.claim.gold_label {
        obj.insert("label".into(), Value::String(label.token().into()));
    }
    obj.insert("tables".into(), Value::Array(tables));
    obj.insert("paragraphs".into(), json!(record.evidence.paragraphs));
    if !record.gold_docs.is_empty() {
        obj.insert("gold_docs".into(), json!(record.gold_docs));
    }
    if !record.retrieved_docs.is_empty() {
        obj.insert("retrieved_docs".into(), json!(record.retrieved_docs));
    }
    serde_json::to_vec(&Value::Object(obj)).expect("serializing a JSON map never fails")
}

fn load_native(bytes: &[u8], scheme: LabelScheme) -> Result<Record, EvidenceError> {
    let wire: WireRecord = serde_json::from_slice(bytes)
        .map_err(|e| EvidenceError::MalformedRecord(e.to_string()))?;
    if wire.claim.trim().is_empty() {
        return Err(EvidenceError::SchemaViolation("empty claim text".into()));
    }
    let gold_label = wire
        .label
        .as_deref()
        .map(|raw| parse_label(raw, scheme))
        .transpose()?;
    let mut tables = Vec::with_capacity(wire.tables.len());
    for wt in wire.tables {
        let mut rows = Vec::with_capacity(wt.rows.len());
        for wr in wt.rows {
            for key in wr.cells.keys() {
                if !wt.columns.iter().any(|c| c == key) {
                    return Err(EvidenceError::SchemaViolation(format!(
                        "cell under unknown column {key:?}"
                    )));
                }
            }
            let cells = wt
                .columns
                .iter()
                .map(|col| {
                    let text = match wr.cells.get(col) {
                        Some(v) => value_to_text(v)?,
                        None => String::new(),
                    };
                    Ok(Cell::new(text.trim()))
                })
                .collect::<Result<Vec<_>, EvidenceError>>()?;
            rows.push(Row {
                label: wr.label,
                cells,
            });
        }
        tables.push(Table::new(wt.caption, wt.columns, rows)?);
    }
    Ok(Record {
        claim: Claim {
            id: wire.id,
            text: wire.claim,
            gold_label,
        },
        evidence: EvidenceBundle {
            tables,
            paragraphs: wire.paragraphs,
        },
        gold_docs: wire.gold_docs,
        retrieved_docs: wire.retrieved_docs,
    })
}

fn load_scitab(bytes: &[u8]) -> Result<Record, EvidenceError> {
    let wire: WireSciTab = serde_json::from_slice(bytes)
        .map_err(|e| EvidenceError::MalformedRecord(e.to_string()))?;
    if wire.claim.trim().is_empty() {
        return Err(EvidenceError::SchemaViolation("empty claim text".into()));
    }
    let gold_label = Some(parse_label(&wire.label, LabelScheme::ThreeWay)?);
    if wire.table_column_names.is_empty() {
        return Err(EvidenceError::SchemaViolation(
            "table_column_names is empty".into(),
        ));
    }
    let columns: Vec<String> = wire.table_column_names[1..]
        .iter()
        .map(|v| Ok(clean_scitab_text(&value_to_text(v)?)))
        .collect::<Result<_, EvidenceError>>()?;
    let mut rows = Vec::with_capacity(wire.table_content_values.len());
    for raw_row in &wire.table_content_values {
        let mut texts: Vec<String> = raw_row
            .iter()
            .map(|v| Ok(clean_scitab_text(&value_to_text(v)?)))
            .collect::<Result<_, EvidenceError>>()?;
        if texts.is_empty() {
            texts.push(String::new());
        }
        // Published rows are occasionally short; pad so the table stays
        // rectangular. Over-long rows are a real schema error.
        while texts.len() < columns.len() + 1 {
            texts.push(String::new());
        }
        if texts.len() > columns.len() + 1 {
            return Err(EvidenceError::SchemaViolation(format!(
                "row {:?} has {} cells for {} columns",
                texts[0],
                texts.len() - 1,
                columns.len()
            )));
        }
        let label = texts.remove(0);
        rows.push(Row {
            label,
            cells: texts.into_iter().map(Cell::new).collect(),
        });
    }
    let table = Table::new(wire.table_caption, columns, rows)?;
    let table_id = wire.table_id.unwrap_or_default();
    let id = wire.id.unwrap_or_else(|| {
        let digest = Sha256::digest(wire.claim.as_bytes());
        format!("{}:{}", table_id, hex::encode(&digest[..4]))
    });
    Ok(Record {
        claim: Claim {
            id,
            text: wire.claim,
            gold_label,
        },
        evidence: EvidenceBundle {
            tables: vec![table],
            paragraphs: Vec::new(),
        },
        gold_docs: if table_id.is_empty() {
            Vec::new()
        } else {
            vec![table_id]
        },
        retrieved_docs: Vec::new(),
    })
}

fn parse_label(raw: &str, scheme: LabelScheme) -> Result<Verdict, EvidenceError> {
    let verdict = Verdict::parse(raw)
        .ok_or_else(|| EvidenceError::SchemaViolation(format!("unknown label {raw:?}")))?;
    if !scheme.contains(verdict) {
        return Err(EvidenceError::SchemaViolation(format!(
            "label {raw:?} outside the task's label scheme"
        )));
    }
    Ok(verdict)
}

fn value_to_text(v: &Value) -> Result<String, EvidenceError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Null => Ok(String::new()),
        other => Err(EvidenceError::MalformedRecord(format!(
            "cell value {other} is not scalar"
        ))),
    }
}

/// Drops SciTab's inline style markers and maps `[EMPTY]` to empty text.
fn clean_scitab_text(s: &str) -> String {
    let mut out = s.to_string();
    for marker in ["[BOLD]", "[ITALIC]", "[EMPTY]"] {
        out = out.replace(marker, "");
    }
    out.trim().to_string()
}
