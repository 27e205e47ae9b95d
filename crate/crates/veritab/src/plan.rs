//! A small structured plan language and its grounded interpreter.
//!
//! Planner agents write prose; this engine exists so verification arithmetic
//! can also run offline, deterministically, and with full provenance. A
//! program is a sequence of named steps, one per line:
//!
//! ```text
//! reused = extract row "Water reused/recycled" section "All Operations" cols "2017".."2023"
//! used   = extract row "Operational water use(4)" section "All Operations" cols "2017".."2023"
//! reused_total = sum reused
//! used_total   = sum used
//! share   = ratio reused_total used_total
//! pct     = percent share
//! check   = compare pct to 55.82 decimals 2
//! verdict = map_verdict check on_match support on_mismatch refute on_missing not_enough_info
//! ```
//!
//! All arithmetic is exact rational; rounding happens only inside `compare`
//! via [`compare_approx`]. Lookup failures (missing table, row, or column,
//! or a non-numeric cell) are "missing data" and map to the terminal step's
//! `on_missing` label when one is configured, since absent evidence must
//! never silently become a refutation. The grammar reference with annotated
//! examples lives in `docs/plan_grammar.md`.

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

use crate::evidence::{parse_number, EvidenceBundle, EvidenceError, Table, Verdict};

/// How `extract` picks columns: an explicit list or an inclusive span.
///
/// A span selects every column between its two endpoints in table order,
/// whichever way round the endpoints are written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    List(Vec<String>),
    Span(String, String),
}

/// One plan operation. Refs name outputs of earlier steps.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanOp {
    Extract {
        table: usize,
        row_label: String,
        section: Option<String>,
        columns: ColumnSelector,
    },
    SumSeries {
        series: String,
    },
    Ratio {
        numerator: String,
        denominator: String,
    },
    Percent {
        of: String,
    },
    CompareApprox {
        value: String,
        claimed: BigRational,
        mode: CompareMode,
    },
    MapVerdict {
        of: Option<String>,
        on_match: Verdict,
        on_mismatch: Verdict,
        on_missing: Option<Verdict>,
    },
}

/// Tolerance for `compare`: match after rounding both sides to a decimal
/// count, or membership in an explicit inclusive band.
#[derive(Debug, Clone, PartialEq)]
pub enum CompareMode {
    Decimals(u32),
    Band { low: BigRational, high: BigRational },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub name: String,
    pub op: PlanOp,
}

/// A validated program: unique step names, resolved refs, exactly one
/// terminal `map_verdict` in final position.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanProgram {
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("line {line}: {message}")]
    Grammar { line: usize, message: String },
    #[error("step {step:?} references unknown or later step {name:?}")]
    UnresolvedRef { step: String, name: String },
    #[error("program has more than one map_verdict step")]
    MultipleTerminals,
    #[error("program has no map_verdict step")]
    MissingTerminal,
    #[error("step {step:?}: evidence has no table {index}")]
    TableNotFound { step: String, index: usize },
    #[error("step {step:?}: cell ({row:?}, {column:?}) is not numeric: {text:?}")]
    NonNumericCell {
        step: String,
        row: String,
        column: String,
        text: String,
    },
    #[error("step {step:?}: division by zero")]
    DivisionByZero { step: String },
    #[error("step {step:?}: {source}")]
    Evidence {
        step: String,
        source: EvidenceError,
    },
}

/// A value flowing between steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Series(Vec<BigRational>),
    Scalar(BigRational),
    Bool(bool),
}

/// One table cell touched during execution, with its exact source location.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRef {
    pub table: usize,
    pub row_label: String,
    pub section: Option<String>,
    pub column: String,
    pub text: String,
}

/// The record of one executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub name: String,
    pub operation: String,
    pub output: Value,
    pub provenance: Vec<CellRef>,
}

/// Full execution record: every step's inputs and outputs plus the final
/// verdict. `note` explains an `on_missing` short-circuit when one fired.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub steps: Vec<StepTrace>,
    pub verdict: Option<Verdict>,
    pub note: Option<String>,
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Str(String),
    Number(BigRational),
    Eq,
    DotDot,
}

fn tokenize_line(line: &str, line_no: usize) -> Result<Vec<Token>, PlanError> {
    let grammar = |message: String| PlanError::Grammar {
        line: line_no,
        message,
    };
    let mut tokens = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '=' {
            tokens.push(Token::Eq);
            i += 1;
        } else if c == '.' && chars.get(i + 1) == Some(&'.') {
            tokens.push(Token::DotDot);
            i += 2;
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(grammar("unterminated string".into()));
            }
            tokens.push(Token::Str(chars[start..j].iter().collect()));
            i = j + 1;
        } else if c.is_ascii_digit() || c == '-' || c == '+' {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                if d == '.' && chars.get(i + 1) == Some(&'.') {
                    break;
                }
                if d.is_ascii_digit() || d == '.' || d == ',' {
                    i += 1;
                } else {
                    break;
                }
            }
            let word: String = chars[start..i].iter().collect();
            let value = parse_number(&word)
                .ok_or_else(|| grammar(format!("bad number literal {word:?}")))?;
            tokens.push(Token::Number(value));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(grammar(format!("unexpected character {c:?}")));
        }
    }
    Ok(tokens)
}

struct LineParser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
}

impl LineParser {
    fn grammar(&self, message: impl Into<String>) -> PlanError {
        PlanError::Grammar {
            line: self.line,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, PlanError> {
        match self.next() {
            Some(Token::Ident(s)) => Ok(s),
            other => Err(self.grammar(format!("expected {what}, found {other:?}"))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), PlanError> {
        match self.next() {
            Some(Token::Ident(s)) if s == kw => Ok(()),
            other => Err(self.grammar(format!("expected keyword {kw:?}, found {other:?}"))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Token::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_str(&mut self, what: &str) -> Result<String, PlanError> {
        match self.next() {
            Some(Token::Str(s)) => Ok(s),
            other => Err(self.grammar(format!("expected quoted {what}, found {other:?}"))),
        }
    }

    fn expect_number(&mut self, what: &str) -> Result<BigRational, PlanError> {
        match self.next() {
            Some(Token::Number(n)) => Ok(n),
            other => Err(self.grammar(format!("expected {what}, found {other:?}"))),
        }
    }

    fn expect_label(&mut self) -> Result<Verdict, PlanError> {
        let word = self.expect_ident("verdict label")?;
        Verdict::parse(&word)
            .ok_or_else(|| self.grammar(format!("unknown verdict label {word:?}")))
    }

    fn expect_end(&mut self) -> Result<(), PlanError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.grammar(format!("unexpected trailing token {t:?}"))),
        }
    }
}

/// Parses and validates a plan program.
pub fn parse_plan(text: &str) -> Result<PlanProgram, PlanError> {
    let mut steps: Vec<PlanStep> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize_line(raw_line, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            tokens,
            pos: 0,
            line: line_no,
        };
        let name = p.expect_ident("step name")?;
        match p.next() {
            Some(Token::Eq) => {}
            other => return Err(p.grammar(format!("expected '=', found {other:?}"))),
        }
        let op = parse_op(&mut p)?;
        p.expect_end()?;
        if steps.iter().any(|s| s.name == name) {
            return Err(p.grammar(format!("duplicate step name {name:?}")));
        }
        steps.push(PlanStep { name, op });
    }
    validate(steps)
}

fn parse_op(p: &mut LineParser) -> Result<PlanOp, PlanError> {
    let op_word = p.expect_ident("operation keyword")?;
    match op_word.as_str() {
        "extract" => {
            let table = if p.eat_keyword("table") {
                let n = p.expect_number("table index")?;
                if !n.is_integer() || n <= BigRational::zero() {
                    return Err(p.grammar("table index must be a positive integer"));
                }
                to_usize(&n).ok_or_else(|| p.grammar("table index out of range"))?
            } else {
                1
            };
            p.expect_keyword("row")?;
            let row_label = p.expect_str("row label")?;
            let section = if p.eat_keyword("section") {
                Some(p.expect_str("section label")?)
            } else {
                None
            };
            p.expect_keyword("cols")?;
            let first = p.expect_str("column key")?;
            let columns = if matches!(p.peek(), Some(Token::DotDot)) {
                p.next();
                let last = p.expect_str("column key")?;
                ColumnSelector::Span(first, last)
            } else {
                let mut keys = vec![first];
                while let Some(Token::Str(_)) = p.peek() {
                    keys.push(p.expect_str("column key")?);
                }
                ColumnSelector::List(keys)
            };
            Ok(PlanOp::Extract {
                table,
                row_label,
                section,
                columns,
            })
        }
        "sum" => Ok(PlanOp::SumSeries {
            series: p.expect_ident("series ref")?,
        }),
        "ratio" => Ok(PlanOp::Ratio {
            numerator: p.expect_ident("numerator ref")?,
            denominator: p.expect_ident("denominator ref")?,
        }),
        "percent" => Ok(PlanOp::Percent {
            of: p.expect_ident("scalar ref")?,
        }),
        "compare" => {
            let value = p.expect_ident("scalar ref")?;
            p.expect_keyword("to")?;
            let claimed = p.expect_number("claimed value")?;
            let mode = if p.eat_keyword("decimals") {
                let d = p.expect_number("decimal count")?;
                if !d.is_integer() || d < BigRational::zero() {
                    return Err(p.grammar("decimals must be a non-negative integer"));
                }
                CompareMode::Decimals(
                    to_usize(&d).ok_or_else(|| p.grammar("decimals out of range"))? as u32,
                )
            } else if p.eat_keyword("band") {
                let low = p.expect_number("band low bound")?;
                let high = p.expect_number("band high bound")?;
                if low > high {
                    return Err(p.grammar("band bounds must satisfy low <= high"));
                }
                CompareMode::Band { low, high }
            } else {
                return Err(p.grammar("compare needs 'decimals N' or 'band LOW HIGH'"));
            };
            Ok(PlanOp::CompareApprox {
                value,
                claimed,
                mode,
            })
        }
        "map_verdict" => {
            let of = match p.peek() {
                Some(Token::Ident(s)) if s != "on_match" => Some(p.expect_ident("ref")?),
                _ => None,
            };
            p.expect_keyword("on_match")?;
            let on_match = p.expect_label()?;
            p.expect_keyword("on_mismatch")?;
            let on_mismatch = p.expect_label()?;
            let on_missing = if p.eat_keyword("on_missing") {
                Some(p.expect_label()?)
            } else {
                None
            };
            Ok(PlanOp::MapVerdict {
                of,
                on_match,
                on_mismatch,
                on_missing,
            })
        }
        other => Err(p.grammar(format!("unknown operation {other:?}"))),
    }
}

fn to_usize(n: &BigRational) -> Option<usize> {
    use num::ToPrimitive;
    n.to_integer().to_usize()
}

/// Output kind of each op, for static ref checking.
fn op_kind(op: &PlanOp) -> &'static str {
    match op {
        PlanOp::Extract { .. } => "series",
        PlanOp::SumSeries { .. } => "scalar",
        PlanOp::Ratio { .. } => "scalar",
        PlanOp::Percent { .. } => "scalar",
        PlanOp::CompareApprox { .. } => "bool",
        PlanOp::MapVerdict { .. } => "verdict",
    }
}

fn validate(steps: Vec<PlanStep>) -> Result<PlanProgram, PlanError> {
    let terminals = steps
        .iter()
        .filter(|s| matches!(s.op, PlanOp::MapVerdict { .. }))
        .count();
    if terminals == 0 {
        return Err(PlanError::MissingTerminal);
    }
    if terminals > 1 {
        return Err(PlanError::MultipleTerminals);
    }
    if !matches!(steps.last().map(|s| &s.op), Some(PlanOp::MapVerdict { .. })) {
        return Err(PlanError::Grammar {
            line: 0,
            message: "map_verdict must be the final step".into(),
        });
    }
    // Refs must name earlier steps of the right kind.
    let mut kinds: Vec<(&str, &'static str)> = Vec::new();
    for step in &steps {
        let check = |name: &str, wanted: &[&str]| -> Result<(), PlanError> {
            match kinds.iter().find(|(n, _)| *n == name) {
                Some((_, kind)) if wanted.contains(kind) => Ok(()),
                Some((_, kind)) => Err(PlanError::Grammar {
                    line: 0,
                    message: format!(
                        "step {:?} needs a {} ref but {name:?} is a {kind}",
                        step.name,
                        wanted.join(" or ")
                    ),
                }),
                None => Err(PlanError::UnresolvedRef {
                    step: step.name.clone(),
                    name: name.to_string(),
                }),
            }
        };
        match &step.op {
            PlanOp::Extract { .. } => {}
            PlanOp::SumSeries { series } => check(series, &["series"])?,
            PlanOp::Ratio {
                numerator,
                denominator,
            } => {
                check(numerator, &["scalar"])?;
                check(denominator, &["scalar"])?;
            }
            PlanOp::Percent { of } => check(of, &["scalar"])?,
            PlanOp::CompareApprox { value, .. } => check(value, &["scalar"])?,
            PlanOp::MapVerdict { of: Some(name), .. } => {
                check(name, &["series", "scalar", "bool"])?
            }
            PlanOp::MapVerdict { of: None, .. } => {}
        }
        kinds.push((step.name.as_str(), op_kind(&step.op)));
    }
    Ok(PlanProgram { steps })
}

// ---------------------------------------------------------------------------
// Execution

/// Rounds to `decimals` places, half away from zero toward +inf
/// (floor(x*10^d + 1/2) / 10^d), exactly.
pub fn round_half_up(x: &BigRational, decimals: u32) -> BigRational {
    let pow = BigRational::from(BigInt::from(10u8).pow(decimals));
    let half = BigRational::new(BigInt::one(), BigInt::from(2u8));
    (x * &pow + half).floor() / pow
}

/// True iff both values agree after rounding to `decimals` places.
pub fn compare_approx(x: &BigRational, claimed: &BigRational, decimals: u32) -> bool {
    round_half_up(x, decimals) == round_half_up(claimed, decimals)
}

fn is_missing_data(err: &PlanError) -> bool {
    matches!(
        err,
        PlanError::TableNotFound { .. }
            | PlanError::NonNumericCell { .. }
            | PlanError::Evidence {
                source: EvidenceError::RowNotFound(_) | EvidenceError::ColumnNotFound(_),
                ..
            }
    )
}

/// Runs a program against evidence, recording every touched cell.
///
/// Lookup failures short-circuit to the terminal step's `on_missing` label
/// when configured (trace keeps the completed steps and a note); otherwise
/// the error propagates.
pub fn execute_plan(
    program: &PlanProgram,
    evidence: &EvidenceBundle,
) -> Result<ExecutionTrace, PlanError> {
    let on_missing = match program.steps.last().map(|s| &s.op) {
        Some(PlanOp::MapVerdict { on_missing, .. }) => *on_missing,
        _ => None,
    };
    let mut trace = ExecutionTrace {
        steps: Vec::new(),
        verdict: None,
        note: None,
    };
    for step in &program.steps {
        match execute_step(step, evidence, &trace) {
            Ok((output, provenance)) => {
                trace.steps.push(StepTrace {
                    name: step.name.clone(),
                    operation: render_op(&step.op),
                    output,
                    provenance,
                });
            }
            Err(MapOrErr::Verdict(v)) => {
                trace.verdict = Some(v);
                return Ok(trace);
            }
            Err(MapOrErr::Err(e)) => {
                if let (true, Some(fallback)) = (is_missing_data(&e), on_missing) {
                    trace.verdict = Some(fallback);
                    trace.note = Some(format!("missing data: {e}"));
                    return Ok(trace);
                }
                return Err(e);
            }
        }
    }
    unreachable!("validated programs end in map_verdict, which always returns")
}

/// Internal control flow: a step either yields a value, finishes the program
/// with a verdict, or fails.
enum MapOrErr {
    Verdict(Verdict),
    Err(PlanError),
}

impl From<PlanError> for MapOrErr {
    fn from(e: PlanError) -> Self {
        MapOrErr::Err(e)
    }
}

fn lookup<'t>(trace: &'t ExecutionTrace, name: &str) -> &'t Value {
    // Validation guarantees the ref exists.
    &trace
        .steps
        .iter()
        .find(|s| s.name == name)
        .expect("validated ref")
        .output
}

fn execute_step(
    step: &PlanStep,
    evidence: &EvidenceBundle,
    trace: &ExecutionTrace,
) -> Result<(Value, Vec<CellRef>), MapOrErr> {
    let scalar = |name: &str| -> BigRational {
        match lookup(trace, name) {
            Value::Scalar(x) => x.clone(),
            _ => unreachable!("validated as scalar"),
        }
    };
    match &step.op {
        PlanOp::Extract {
            table,
            row_label,
            section,
            columns,
        } => {
            let t: &Table =
                evidence
                    .tables
                    .get(table - 1)
                    .ok_or_else(|| PlanError::TableNotFound {
                        step: step.name.clone(),
                        index: *table,
                    })?;
            let keys: Vec<String> = match columns {
                ColumnSelector::List(keys) => keys.clone(),
                ColumnSelector::Span(a, b) => {
                    let pos = |key: &str| -> Result<usize, PlanError> {
                        t.columns.iter().position(|c| c == key).ok_or_else(|| {
                            PlanError::Evidence {
                                step: step.name.clone(),
                                source: EvidenceError::ColumnNotFound(key.to_string()),
                            }
                        })
                    };
                    let (i, j) = (pos(a)?, pos(b)?);
                    let (lo, hi) = (i.min(j), i.max(j));
                    t.columns[lo..=hi].to_vec()
                }
            };
            let mut values = Vec::with_capacity(keys.len());
            let mut provenance = Vec::with_capacity(keys.len());
            for key in &keys {
                let cell = t
                    .lookup_cell(row_label, section.as_deref(), key)
                    .map_err(|source| PlanError::Evidence {
                        step: step.name.clone(),
                        source,
                    })?;
                let value = cell.number.clone().ok_or_else(|| PlanError::NonNumericCell {
                    step: step.name.clone(),
                    row: row_label.clone(),
                    column: key.clone(),
                    text: cell.text.clone(),
                })?;
                values.push(value);
                provenance.push(CellRef {
                    table: *table,
                    row_label: row_label.clone(),
                    section: section.clone(),
                    column: key.clone(),
                    text: cell.text.clone(),
                });
            }
            Ok((Value::Series(values), provenance))
        }
        PlanOp::SumSeries { series } => {
            let values = match lookup(trace, series) {
                Value::Series(v) => v,
                _ => unreachable!("validated as series"),
            };
            let total = values.iter().fold(BigRational::zero(), |a, b| a + b);
            Ok((Value::Scalar(total), Vec::new()))
        }
        PlanOp::Ratio {
            numerator,
            denominator,
        } => {
            let den = scalar(denominator);
            if den.is_zero() {
                return Err(PlanError::DivisionByZero {
                    step: step.name.clone(),
                }
                .into());
            }
            Ok((Value::Scalar(scalar(numerator) / den), Vec::new()))
        }
        PlanOp::Percent { of } => {
            let hundred = BigRational::from(BigInt::from(100u8));
            Ok((Value::Scalar(scalar(of) * hundred), Vec::new()))
        }
        PlanOp::CompareApprox {
            value,
            claimed,
            mode,
        } => {
            let x = scalar(value);
            let matched = match mode {
                CompareMode::Decimals(d) => compare_approx(&x, claimed, *d),
                CompareMode::Band { low, high } => *low <= x && x <= *high,
            };
            Ok((Value::Bool(matched), Vec::new()))
        }
        PlanOp::MapVerdict {
            of,
            on_match,
            on_mismatch,
            ..
        } => {
            let source = match of {
                Some(name) => lookup(trace, name).clone(),
                None => match trace.steps.last() {
                    Some(prev) => prev.output.clone(),
                    None => {
                        return Err(PlanError::Grammar {
                            line: 0,
                            message: "map_verdict without ref needs a preceding step".into(),
                        }
                        .into())
                    }
                },
            };
            let verdict = match source {
                Value::Bool(true) => *on_match,
                Value::Bool(false) => *on_mismatch,
                // A non-bool source reaching the terminal means every lookup
                // succeeded; that is the match path.
                Value::Series(_) | Value::Scalar(_) => *on_match,
            };
            Err(MapOrErr::Verdict(verdict))
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering

fn render_op(op: &PlanOp) -> String {
    match op {
        PlanOp::Extract {
            table,
            row_label,
            section,
            columns,
        } => {
            let mut s = String::from("extract");
            if *table != 1 {
                s.push_str(&format!(" table {table}"));
            }
            s.push_str(&format!(" row {row_label:?}"));
            if let Some(sec) = section {
                s.push_str(&format!(" section {sec:?}"));
            }
            match columns {
                ColumnSelector::List(keys) => {
                    s.push_str(" cols");
                    for k in keys {
                        s.push_str(&format!(" {k:?}"));
                    }
                }
                ColumnSelector::Span(a, b) => s.push_str(&format!(" cols {a:?}..{b:?}")),
            }
            s
        }
        PlanOp::SumSeries { series } => format!("sum {series}"),
        PlanOp::Ratio {
            numerator,
            denominator,
        } => format!("ratio {numerator} {denominator}"),
        PlanOp::Percent { of } => format!("percent {of}"),
        PlanOp::CompareApprox {
            value,
            claimed,
            mode,
        } => match mode {
            CompareMode::Decimals(d) => {
                format!("compare {value} to {} decimals {d}", decimal_string(claimed))
            }
            CompareMode::Band { low, high } => format!(
                "compare {value} to {} band {} {}",
                decimal_string(claimed),
                decimal_string(low),
                decimal_string(high)
            ),
        },
        PlanOp::MapVerdict {
            of,
            on_match,
            on_mismatch,
            on_missing,
        } => {
            let mut s = String::from("map_verdict");
            if let Some(name) = of {
                s.push_str(&format!(" {name}"));
            }
            s.push_str(&format!(
                " on_match {} on_mismatch {}",
                on_match.token(),
                on_mismatch.token()
            ));
            if let Some(v) = on_missing {
                s.push_str(&format!(" on_missing {}", v.token()));
            }
            s
        }
    }
}

/// Renders a rational for humans: exact decimal when it terminates within
/// nine places, otherwise a nine-place approximation marked with `≈`.
pub fn decimal_string(x: &BigRational) -> String {
    let negative = x.is_negative();
    let abs = x.abs();
    let int = abs.floor().to_integer();
    let mut frac = &abs - BigRational::from(int.clone());
    let mut digits = String::new();
    let ten = BigRational::from(BigInt::from(10u8));
    let mut exact = true;
    for _ in 0..9 {
        if frac.is_zero() {
            break;
        }
        frac *= &ten;
        let d = frac.floor().to_integer();
        digits.push_str(&d.to_string());
        frac -= BigRational::from(d);
    }
    if !frac.is_zero() {
        exact = false;
    }
    let mut out = String::new();
    if !exact {
        out.push('≈');
    }
    if negative {
        out.push('-');
    }
    out.push_str(&group_thousands(&int.to_string()));
    if !digits.is_empty() {
        out.push('.');
        out.push_str(&digits);
    }
    out
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::new();
    let n = digits.len();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (n - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Renders a trace as the human-readable block embedded in transcripts.
pub fn render_trace(trace: &ExecutionTrace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        out.push_str(&format!("{} = {}\n", step.name, step.operation));
        match &step.output {
            Value::Series(values) => {
                let parts: Vec<String> = values.iter().map(decimal_string).collect();
                out.push_str(&format!("  -> [{}]\n", parts.join(", ")));
            }
            Value::Scalar(x) => out.push_str(&format!("  -> {}\n", decimal_string(x))),
            Value::Bool(b) => out.push_str(&format!("  -> {b}\n")),
        }
        for cell in &step.provenance {
            let section = match &cell.section {
                Some(s) => format!(" / {s:?}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "  cell table {}{} / {:?} / {:?} = {:?}\n",
                cell.table, section, cell.row_label, cell.column, cell.text
            ));
        }
    }
    match (trace.verdict, &trace.note) {
        (Some(v), Some(note)) => out.push_str(&format!("verdict: {} ({note})\n", v.as_str())),
        (Some(v), None) => out.push_str(&format!("verdict: {}\n", v.as_str())),
        (None, _) => {}
    }
    out
}
