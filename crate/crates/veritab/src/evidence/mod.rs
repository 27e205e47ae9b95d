//! Claims, tables, paragraphs, and verdict labels.
//!
//! Tables are rectangular: an ordered list of column keys plus rows that
//! carry a label and exactly one cell per column. A row whose cells are all
//! empty acts as a section header; the rows after it belong to that section
//! until the next header. This reproduces the sectioned layout common in
//! report tables ("All Operations" vs "Mining Operations" and the like).

mod html;
mod record;

pub use html::{parse_table_html, render_table_html};
pub use record::{load_record, serialize_record, Record, RecordFormat};

use num::BigRational;
use thiserror::Error;

/// A final verification label.
///
/// `revise` is deliberately not a variant: it is a protocol token agents use
/// to bounce work upstream, never a final verdict. See
/// [`crate::agents::Outcome`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Support,
    Refute,
    NotEnoughInfo,
}

impl Verdict {
    /// Canonical label text, as it appears in agent replies.
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Support => "support",
            Verdict::Refute => "refute",
            Verdict::NotEnoughInfo => "not enough info",
        }
    }

    /// Single-token form used in record files and the plan grammar.
    pub fn token(&self) -> &'static str {
        match self {
            Verdict::Support => "support",
            Verdict::Refute => "refute",
            Verdict::NotEnoughInfo => "not_enough_info",
        }
    }

    /// Parses either the canonical or the single-token form, case-insensitively.
    pub fn parse(s: &str) -> Option<Verdict> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| {
                if c == '_' || c == '-' {
                    ' '
                } else {
                    c.to_ascii_lowercase()
                }
            })
            .collect();
        let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
        match norm.as_str() {
            "support" | "supports" | "supported" => Some(Verdict::Support),
            "refute" | "refutes" | "refuted" => Some(Verdict::Refute),
            "not enough info" | "not enough information" | "nei" => Some(Verdict::NotEnoughInfo),
            _ => None,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Label arity of a task: three-way adds "not enough info" to support/refute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelScheme {
    TwoWay,
    ThreeWay,
}

impl LabelScheme {
    pub fn labels(&self) -> &'static [Verdict] {
        match self {
            LabelScheme::TwoWay => &[Verdict::Support, Verdict::Refute],
            LabelScheme::ThreeWay => &[Verdict::Support, Verdict::Refute, Verdict::NotEnoughInfo],
        }
    }

    pub fn contains(&self, v: Verdict) -> bool {
        self.labels().contains(&v)
    }
}

/// Whether evidence arrives paired with the claim or must be retrieved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Closed,
    Open,
}

/// One natural-language claim to verify.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub id: String,
    pub text: String,
    pub gold_label: Option<Verdict>,
}

/// A table cell: the original text plus the parsed numeric value when the
/// text looks numeric (thousands separators stripped, exact rational).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub text: String,
    pub number: Option<BigRational>,
}

impl Cell {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let number = parse_number(&text);
        Cell { text, number }
    }

    pub fn is_empty(&self) -> bool {
        self.text.trim().is_empty()
    }
}

/// A table row: a label plus one cell per column, in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

/// A rectangular table with a caption, ordered column keys, and labeled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub caption: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvidenceError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("row not found: {0:?}")]
    RowNotFound(String),
    #[error("row label {0:?} matches more than one row (section filter {1:?})")]
    AmbiguousRow(String, Option<String>),
    #[error("column not found: {0:?}")]
    ColumnNotFound(String),
}

impl Table {
    /// Builds a table, enforcing rectangularity and column-key uniqueness.
    pub fn new(
        caption: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Row>,
    ) -> Result<Table, EvidenceError> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(EvidenceError::SchemaViolation(format!(
                    "duplicate column key {c:?}"
                )));
            }
        }
        for row in &rows {
            if row.cells.len() != columns.len() {
                return Err(EvidenceError::SchemaViolation(format!(
                    "row {:?} has {} cells for {} columns",
                    row.label,
                    row.cells.len(),
                    columns.len()
                )));
            }
        }
        Ok(Table {
            caption: caption.into(),
            columns,
            rows,
        })
    }

    /// True if the row is a section header: every cell empty.
    pub fn is_section_header(&self, row_idx: usize) -> bool {
        self.rows[row_idx].cells.iter().all(Cell::is_empty)
    }

    /// The section a row belongs to: the label of the nearest preceding
    /// header row. Header rows belong to themselves; rows before any header
    /// have no section.
    pub fn section_of(&self, row_idx: usize) -> Option<&str> {
        for i in (0..=row_idx).rev() {
            if self.is_section_header(i) {
                return Some(self.rows[i].label.as_str());
            }
        }
        None
    }

    /// Finds the unique row with the given label, optionally restricted to a
    /// section.
    pub fn find_row(
        &self,
        row_label: &str,
        section: Option<&str>,
    ) -> Result<usize, EvidenceError> {
        let matches: Vec<usize> = (0..self.rows.len())
            .filter(|&i| self.rows[i].label == row_label)
            .filter(|&i| match section {
                Some(sec) => self.section_of(i) == Some(sec),
                None => true,
            })
            .collect();
        match matches.len() {
            0 => Err(EvidenceError::RowNotFound(row_label.to_string())),
            1 => Ok(matches[0]),
            _ => Err(EvidenceError::AmbiguousRow(
                row_label.to_string(),
                section.map(str::to_string),
            )),
        }
    }

    /// Looks up the unique cell at (row label, section, column key).
    pub fn lookup_cell(
        &self,
        row_label: &str,
        section: Option<&str>,
        column_key: &str,
    ) -> Result<&Cell, EvidenceError> {
        let col = self
            .columns
            .iter()
            .position(|c| c == column_key)
            .ok_or_else(|| EvidenceError::ColumnNotFound(column_key.to_string()))?;
        let row = self.find_row(row_label, section)?;
        Ok(&self.rows[row].cells[col])
    }
}

/// Evidence attached to a claim: zero or more tables and paragraphs.
///
/// Closed-domain tasks require at least one of either; open-domain tasks may
/// start empty and gain evidence from retrieval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvidenceBundle {
    pub tables: Vec<Table>,
    pub paragraphs: Vec<String>,
}

impl EvidenceBundle {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty() && self.paragraphs.is_empty()
    }
}

/// Parses numeric-looking cell text to an exact rational.
///
/// Thousands separators (commas) are stripped and a single trailing `%` is
/// tolerated; the percent sign does not scale the value, it is treated as a
/// unit carried by the original text.
pub fn parse_number(text: &str) -> Option<BigRational> {
    let mut s = text.trim();
    if let Some(stripped) = s.strip_suffix('%') {
        s = stripped.trim_end();
    }
    let s: String = s.chars().filter(|&c| c != ',').collect();
    if s.is_empty() {
        return None;
    }
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1i32, rest),
        None => (1i32, s.strip_prefix('+').unwrap_or(&s)),
    };
    let mut parts = digits.splitn(2, '.');
    let int_part = parts.next().unwrap_or("");
    let frac_part = parts.next().unwrap_or("");
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    use num::{BigInt, One, Zero};
    let mut numer = BigInt::zero();
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer * 10 + (c as u8 - b'0');
    }
    let mut denom = BigInt::one();
    for _ in 0..frac_part.len() {
        denom *= 10;
    }
    if sign < 0 {
        numer = -numer;
    }
    Some(BigRational::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_plain_integers_and_separators() {
        assert_eq!(parse_number("145,770"), Some(rat(145770, 1)));
        assert_eq!(parse_number("  168358 "), Some(rat(168358, 1)));
        assert_eq!(parse_number("-12"), Some(rat(-12, 1)));
        assert_eq!(parse_number("55.82"), Some(rat(5582, 100)));
        assert_eq!(parse_number("55.82%"), Some(rat(5582, 100)));
        assert_eq!(parse_number(".5"), Some(rat(1, 2)));
    }

    #[test]
    fn rejects_non_numeric_text() {
        assert_eq!(parse_number(""), None);
        assert_eq!(parse_number("ML"), None);
        assert_eq!(parse_number("12 ML"), None);
        assert_eq!(parse_number("3.4.5"), None);
        assert_eq!(parse_number("-"), None);
        assert_eq!(parse_number("."), None);
    }

    #[test]
    fn verdict_parse_accepts_common_forms() {
        assert_eq!(Verdict::parse("SUPPORTS"), Some(Verdict::Support));
        assert_eq!(Verdict::parse("not_enough_info"), Some(Verdict::NotEnoughInfo));
        assert_eq!(Verdict::parse("Not Enough Info"), Some(Verdict::NotEnoughInfo));
        assert_eq!(Verdict::parse("maybe"), None);
    }

    #[test]
    fn sections_follow_nearest_preceding_header() {
        let t = Table::new(
            "",
            vec!["A".into()],
            vec![
                Row { label: "Sec 1".into(), cells: vec![Cell::new("")] },
                Row { label: "x".into(), cells: vec![Cell::new("1")] },
                Row { label: "Sec 2".into(), cells: vec![Cell::new("")] },
                Row { label: "x".into(), cells: vec![Cell::new("2")] },
            ],
        )
        .unwrap();
        assert_eq!(t.section_of(1), Some("Sec 1"));
        assert_eq!(t.section_of(3), Some("Sec 2"));
        assert!(t.is_section_header(2));
        assert_eq!(
            t.lookup_cell("x", Some("Sec 2"), "A").unwrap().number,
            Some(BigRational::from_i64(2).unwrap())
        );
        assert_eq!(
            t.lookup_cell("x", None, "A"),
            Err(EvidenceError::AmbiguousRow("x".into(), None))
        );
        assert_eq!(
            t.lookup_cell("y", None, "A"),
            Err(EvidenceError::RowNotFound("y".into()))
        );
        assert_eq!(
            t.lookup_cell("x", None, "B"),
            Err(EvidenceError::ColumnNotFound("B".into()))
        );
    }
}
