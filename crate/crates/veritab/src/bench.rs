//! Dataset loading, classification metrics, and the benchmark runner.
//!
//! Five dataset profiles are built in, each naming its label scheme, its
//! metric, and its published sizes; loaded files whose counts differ only
//! produce warnings, so fixtures and subsets stay usable. Dataset files are
//! JSONL in either the native record shape or the published scitab shape,
//! told apart by their keys.
//!
//! The runner executes one configuration variant over a dataset: the two
//! single-prompt baselines issue one model call per claim and extract the
//! verdict from the reply, while the conversational variants drive the full
//! group chat. Failed claims are recorded with their cause and excluded
//! from the metric, never silently dropped. Reports carry per-claim rows,
//! the aggregate metric (always recomputable from the rows), retrieval
//! recall when the dataset is open, and a full configuration echo; they
//! contain no timestamps, so a replayed run reproduces its report
//! byte-for-byte.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{
    parse_agent_verdict, AgentBinding, AgentRole, Outcome, TemplateSet,
};
use crate::evidence::{
    load_record, render_table_html, EvidenceError, LabelScheme, Record, RecordFormat, Setting,
    Table, Verdict,
};
use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError};
use crate::orchestrator::{
    render_evidence, run_conversation, ConversationPolicy, ConversationVariant,
    OrchestratorError, VerificationTask,
};
use crate::retrieval::{
    recall_at_k, table_retrieval_text, Corpus, Document, Embedder, RetrievalConfig,
    RetrievalError, RetrievalMethod, RetrievalResult, Retriever,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("dataset error in {path} line {line}: {source}")]
    Malformed {
        path: String,
        line: usize,
        source: EvidenceError,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

// ---------------------------------------------------------------------------
// Dataset profiles

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetName {
    SciTab,
    SemTab,
    FinDVerTestmini,
    FinDVerTest,
    SciTabOd,
}

impl DatasetName {
    pub fn token(&self) -> &'static str {
        match self {
            DatasetName::SciTab => "SciTab",
            DatasetName::SemTab => "SemTab",
            DatasetName::FinDVerTestmini => "FinDVer-TM",
            DatasetName::FinDVerTest => "FinDVer-T",
            DatasetName::SciTabOd => "SciTab-OD",
        }
    }

    pub fn parse(s: &str) -> Option<DatasetName> {
        match s {
            "SciTab" => Some(DatasetName::SciTab),
            "SemTab" => Some(DatasetName::SemTab),
            "FinDVer-TM" => Some(DatasetName::FinDVerTestmini),
            "FinDVer-T" => Some(DatasetName::FinDVerTest),
            "SciTab-OD" => Some(DatasetName::SciTabOd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    MacroF1,
    MicroF1,
    Accuracy,
}

impl MetricKind {
    pub fn token(&self) -> &'static str {
        match self {
            MetricKind::MacroF1 => "macro_f1",
            MetricKind::MicroF1 => "micro_f1",
            MetricKind::Accuracy => "accuracy",
        }
    }
}

/// A dataset profile: scheme, metric, setting, and published sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub scheme: LabelScheme,
    pub metric: MetricKind,
    pub setting: Setting,
    /// Published claim count; loads that differ warn, not fail.
    pub expected_claims: usize,
    /// Published distinct evidence-table count.
    pub expected_tables: usize,
}

impl DatasetSpec {
    pub fn builtin(name: DatasetName) -> DatasetSpec {
        match name {
            DatasetName::SciTab => DatasetSpec {
                name,
                scheme: LabelScheme::ThreeWay,
                metric: MetricKind::MacroF1,
                setting: Setting::Closed,
                expected_claims: 1224,
                expected_tables: 213,
            },
            DatasetName::SemTab => DatasetSpec {
                name,
                scheme: LabelScheme::ThreeWay,
                metric: MetricKind::MicroF1,
                setting: Setting::Closed,
                expected_claims: 653,
                expected_tables: 2961,
            },
            DatasetName::FinDVerTestmini => DatasetSpec {
                name,
                scheme: LabelScheme::TwoWay,
                metric: MetricKind::Accuracy,
                setting: Setting::Open,
                expected_claims: 700,
                expected_tables: 517,
            },
            DatasetName::FinDVerTest => DatasetSpec {
                name,
                scheme: LabelScheme::TwoWay,
                metric: MetricKind::Accuracy,
                setting: Setting::Open,
                expected_claims: 1700,
                expected_tables: 1262,
            },
            DatasetName::SciTabOd => DatasetSpec {
                name,
                scheme: LabelScheme::TwoWay,
                metric: MetricKind::MacroF1,
                setting: Setting::Open,
                expected_claims: 868,
                expected_tables: 213,
            },
        }
    }
}

/// Loaded records plus count-check warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
}

/// Writes records as native JSONL, one per line.
pub fn write_records(path: impl AsRef<Path>, records: &[Record]) -> Result<(), BenchError> {
    let mut bytes = Vec::new();
    for record in records {
        bytes.extend(crate::evidence::serialize_record(record));
        bytes.push(b'\n');
    }
    fs::write(path.as_ref(), bytes).map_err(|e| {
        BenchError::Dataset(format!("cannot write {}: {e}", path.as_ref().display()))
    })
}

/// The stable corpus id of a table: "t" plus the first 12 hex digits of
/// the digest of its HTML rendering, so identical tables share an id.
pub fn table_doc_id(table: &Table) -> String {
    let digest = Sha256::digest(render_table_html(table).as_bytes());
    format!("t{}", &hex::encode(digest)[..12])
}

fn sniff_format(line: &str, scheme: LabelScheme) -> RecordFormat {
    match serde_json::from_str::<serde_json::Value>(line) {
        Ok(v) if v.get("table_column_names").is_some() => RecordFormat::SciTab,
        _ => RecordFormat::Native { scheme },
    }
}

/// Loads a JSONL dataset file, telling the native and published scitab
/// shapes apart by their keys. Count mismatches against the profile's
/// published sizes become warnings.
pub fn load_dataset(spec: &DatasetSpec, path: impl AsRef<Path>) -> Result<LoadedDataset, BenchError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path)
        .map_err(|e| BenchError::Dataset(format!("cannot read {}: {e}", path.display())))?;
    let mut records = Vec::new();
    let mut format = None;
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let format = *format.get_or_insert_with(|| sniff_format(line, spec.scheme));
        let record = load_record(line.as_bytes(), format).map_err(|source| {
            BenchError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                source,
            }
        })?;
        records.push(record);
    }
    let mut warnings = Vec::new();
    if records.is_empty() {
        return Err(BenchError::Dataset(format!("{} has no records", path.display())));
    }
    if records.len() != spec.expected_claims {
        warnings.push(format!(
            "{}: expected {} claims, loaded {}",
            spec.name.token(),
            spec.expected_claims,
            records.len()
        ));
    }
    let distinct: BTreeSet<String> = records
        .iter()
        .flat_map(|r| r.evidence.tables.iter().map(table_doc_id))
        .collect();
    if !distinct.is_empty() && distinct.len() != spec.expected_tables {
        warnings.push(format!(
            "{}: expected {} distinct tables, loaded {}",
            spec.name.token(),
            spec.expected_tables,
            distinct.len()
        ));
    }
    Ok(LoadedDataset { records, warnings })
}

// ---------------------------------------------------------------------------
// Open-domain construction

/// An open-domain dataset derived from closed records: a deduplicated
/// table corpus plus records re-paired with their retrieved evidence.
#[derive(Debug)]
pub struct OpenDomainBuild {
    pub records: Vec<Record>,
    pub corpus: Corpus,
    pub results: Vec<RetrievalResult>,
}

impl OpenDomainBuild {
    /// Gold-coverage recall of the retrieval pass that built the records.
    pub fn recall(&self) -> Result<f64, BenchError> {
        recall_from_records(&self.records).ok_or_else(|| {
            BenchError::Dataset("no records with gold documents".into())
        })
    }
}

/// Mean gold coverage computable from records alone, using their
/// `retrieved_docs` and `gold_docs`. None when no record carries gold.
pub fn recall_from_records(records: &[Record]) -> Option<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for record in records {
        if record.gold_docs.is_empty() {
            continue;
        }
        let hit = record
            .gold_docs
            .iter()
            .filter(|g| record.retrieved_docs.contains(g))
            .count();
        total += hit as f64 / record.gold_docs.len() as f64;
        n += 1;
    }
    (n > 0).then(|| total / n as f64)
}

/// Builds the deduplicated table corpus over a record set. Every distinct
/// table becomes one document; `source` names the first record it came
/// from.
pub fn build_table_corpus(records: &[Record]) -> Result<(Corpus, Vec<Table>), BenchError> {
    let mut seen = BTreeSet::new();
    let mut documents = Vec::new();
    let mut tables = Vec::new();
    for record in records {
        for table in &record.evidence.tables {
            let doc_id = table_doc_id(table);
            if seen.insert(doc_id.clone()) {
                documents.push(Document {
                    doc_id,
                    source: record.claim.id.clone(),
                    text: table_retrieval_text(table),
                });
                tables.push(table.clone());
            }
        }
    }
    Ok((Corpus::new(documents)?, tables))
}

/// Rebuilds closed records as an open-domain dataset: claims labeled
/// "not enough info" are dropped, each surviving claim is paired with its
/// top-k retrieved tables, and the original gold table ids are kept for
/// recall scoring.
pub fn build_scitab_od(
    records: &[Record],
    config: &RetrievalConfig,
    embedder: Option<&dyn Embedder>,
    k: usize,
) -> Result<OpenDomainBuild, BenchError> {
    let (corpus, tables) = build_table_corpus(records)?;
    if corpus.is_empty() {
        return Err(BenchError::Dataset("records carry no tables".into()));
    }
    let retriever = match config.method {
        RetrievalMethod::Bm25 => Retriever::bm25(corpus.clone(), config.clone())?,
        RetrievalMethod::Embedding => {
            let embedder = embedder.ok_or_else(|| {
                BenchError::Config("embedding retrieval needs an embedder".into())
            })?;
            Retriever::embedding(corpus.clone(), config.clone(), embedder)?
        }
    };
    let mut out_records = Vec::new();
    let mut results = Vec::new();
    for record in records {
        match record.claim.gold_label {
            Some(Verdict::Support) | Some(Verdict::Refute) => {}
            _ => continue,
        }
        let gold_docs: Vec<String> = record
            .evidence
            .tables
            .iter()
            .map(table_doc_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let result = retriever.retrieve_k(&record.claim.id, &record.claim.text, embedder, k)?;
        let retrieved_docs: Vec<String> =
            result.ranking.iter().map(|d| d.doc_id.clone()).collect();
        let attached: Vec<Table> = retrieved_docs
            .iter()
            .filter_map(|id| {
                corpus
                    .documents()
                    .iter()
                    .position(|d| &d.doc_id == id)
                    .map(|i| tables[i].clone())
            })
            .collect();
        let mut record = record.clone();
        record.evidence.tables = attached;
        record.evidence.paragraphs.clear();
        record.gold_docs = gold_docs;
        record.retrieved_docs = retrieved_docs;
        out_records.push(record);
        results.push(result);
    }
    if out_records.is_empty() {
        return Err(BenchError::Dataset(
            "no support/refute claims to carry over".into(),
        ));
    }
    Ok(OpenDomainBuild {
        records: out_records,
        corpus,
        results,
    })
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no predictions to score")]
    EmptyInput,
    #[error("length mismatch: {preds} predictions vs {golds} golds")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("label {0:?} is outside the class set")]
    UnknownLabel(String),
}

fn check_lengths(preds: &[Verdict], golds: &[Verdict]) -> Result<(), MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(())
}

/// Macro F1 over a fixed class set: the unweighted mean of per-class F1,
/// where a class absent from both predictions and golds contributes 0.
pub fn macro_f1(
    preds: &[Verdict],
    golds: &[Verdict],
    classes: &[Verdict],
) -> Result<f64, MetricError> {
    macro_f1_over(preds, golds, classes, false)
}

/// Macro F1 with a switch to average only over classes that actually
/// occur, for comparability with evaluators that skip absent classes.
pub fn macro_f1_over(
    preds: &[Verdict],
    golds: &[Verdict],
    classes: &[Verdict],
    present_only: bool,
) -> Result<f64, MetricError> {
    check_lengths(preds, golds)?;
    if classes.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    for label in preds.iter().chain(golds) {
        if !classes.contains(label) {
            return Err(MetricError::UnknownLabel(label.as_str().to_string()));
        }
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for class in classes {
        let tp = preds
            .iter()
            .zip(golds)
            .filter(|(p, g)| *p == class && *g == class)
            .count() as f64;
        let fp = preds
            .iter()
            .zip(golds)
            .filter(|(p, g)| *p == class && *g != class)
            .count() as f64;
        let fn_ = preds
            .iter()
            .zip(golds)
            .filter(|(p, g)| *p != class && *g == class)
            .count() as f64;
        if present_only && tp + fp + fn_ == 0.0 {
            continue;
        }
        let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
        sum += f1;
        counted += 1;
    }
    if counted == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok(sum / counted as f64)
}

/// Micro F1: global TP/(TP + (FP+FN)/2). For single-label classification
/// every miss is one FP and one FN, so this equals accuracy.
pub fn micro_f1(preds: &[Verdict], golds: &[Verdict]) -> Result<f64, MetricError> {
    check_lengths(preds, golds)?;
    let tp = preds.iter().zip(golds).filter(|(p, g)| p == g).count() as f64;
    let miss = preds.len() as f64 - tp;
    Ok(tp / (tp + miss))
}

pub fn accuracy(preds: &[Verdict], golds: &[Verdict]) -> Result<f64, MetricError> {
    check_lengths(preds, golds)?;
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// The dataset's published metric over aligned prediction/gold pairs.
pub fn score(
    spec: &DatasetSpec,
    preds: &[Verdict],
    golds: &[Verdict],
) -> Result<f64, MetricError> {
    match spec.metric {
        MetricKind::MacroF1 => macro_f1(preds, golds, spec.scheme.labels()),
        MetricKind::MicroF1 => micro_f1(preds, golds),
        MetricKind::Accuracy => accuracy(preds, golds),
    }
}

// ---------------------------------------------------------------------------
// Run configuration

/// One benchmark configuration: the two single-prompt baselines or the
/// three group-chat variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    WCot,
    WoCot,
    Pe,
    PevSame,
    PevIndep,
}

impl Variant {
    pub fn token(&self) -> &'static str {
        match self {
            Variant::WCot => "wCOT",
            Variant::WoCot => "woCOT",
            Variant::Pe => "PE",
            Variant::PevSame => "PEV_same",
            Variant::PevIndep => "PEV_indep",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "wCOT" => Some(Variant::WCot),
            "woCOT" => Some(Variant::WoCot),
            "PE" => Some(Variant::Pe),
            "PEV_same" => Some(Variant::PevSame),
            "PEV_indep" => Some(Variant::PevIndep),
            _ => None,
        }
    }

    pub fn conversational(&self) -> Option<ConversationVariant> {
        match self {
            Variant::WCot | Variant::WoCot => None,
            Variant::Pe => Some(ConversationVariant::Pe),
            Variant::PevSame => Some(ConversationVariant::PevSame),
            Variant::PevIndep => Some(ConversationVariant::PevIndep),
        }
    }
}

/// The single-prompt baseline texts with `{evidence}`, `{claim}`, and
/// `{labels}` placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePrompts {
    pub wcot: String,
    pub wocot: String,
}

impl BaselinePrompts {
    pub fn builtin() -> Self {
        BaselinePrompts {
            wcot: include_str!("../assets/baselines/wcot.txt").trim_end().to_string(),
            wocot: include_str!("../assets/baselines/wocot.txt").trim_end().to_string(),
        }
    }

    fn render(&self, variant: Variant, record: &Record, scheme: LabelScheme) -> String {
        let template = match variant {
            Variant::WCot => &self.wcot,
            _ => &self.wocot,
        };
        let labels = scheme
            .labels()
            .iter()
            .map(|v| v.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        template
            .replace("{evidence}", &render_evidence(&record.evidence))
            .replace("{claim}", &record.claim.text)
            .replace("{labels}", &labels)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub data_path: PathBuf,
    pub variant: Variant,
    pub bindings: Vec<AgentBinding>,
    /// Runtime retrieval for open datasets whose records lack evidence.
    pub retrieval: Option<RetrievalConfig>,
    /// Echoed into the report; the gateway owns the store itself.
    pub replay_dir: Option<PathBuf>,
    /// Worker threads; at least 1.
    pub parallelism: usize,
    /// Cap on claims processed; zero is a dataset error.
    pub limit: Option<usize>,
}

impl RunConfig {
    pub fn new(dataset: DatasetSpec, data_path: impl Into<PathBuf>, variant: Variant) -> Self {
        RunConfig {
            dataset,
            data_path: data_path.into(),
            variant,
            bindings: Vec::new(),
            retrieval: None,
            replay_dir: None,
            parallelism: 1,
            limit: None,
        }
    }

    fn binding(&self, role: AgentRole) -> Result<&AgentBinding, BenchError> {
        self.bindings
            .iter()
            .find(|b| b.role == role)
            .ok_or_else(|| BenchError::Config(format!("no binding for role {role}")))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.parallelism == 0 {
            return Err(BenchError::Config("parallelism must be at least 1".into()));
        }
        if self.limit == Some(0) {
            return Err(BenchError::Dataset("limit is zero".into()));
        }
        match self.variant {
            Variant::WCot | Variant::WoCot => {
                self.binding(AgentRole::Executor)?;
            }
            Variant::Pe => {
                self.binding(AgentRole::Planner)?;
                self.binding(AgentRole::Executor)?;
            }
            Variant::PevSame | Variant::PevIndep => {
                self.binding(AgentRole::Planner)?;
                let executor = self.binding(AgentRole::Executor)?;
                let verifier = self.binding(AgentRole::Verifier)?;
                if self.variant == Variant::PevIndep && verifier.endpoint == executor.endpoint {
                    return Err(BenchError::Config(
                        "PEV_indep requires a Verifier endpoint distinct from the Executor's"
                            .into(),
                    ));
                }
                if self.variant == Variant::PevSame && verifier.endpoint != executor.endpoint {
                    return Err(BenchError::Config(
                        "PEV_same requires the Verifier on the Executor's endpoint".into(),
                    ));
                }
            }
        }
        if let Some(retrieval) = &self.retrieval {
            retrieval.validate()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimRow {
    pub id: String,
    pub prediction: Option<String>,
    pub gold: Option<String>,
    pub exhausted: bool,
    pub rounds: usize,
    pub wall_clock_ms: u128,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalEcho {
    pub method: String,
    pub k: usize,
    pub k1: f64,
    pub b: f64,
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub scheme: String,
    pub metric: String,
    pub setting: String,
    pub data_path: String,
    pub variant: String,
    pub bindings: Vec<(String, String)>,
    pub retrieval: Option<RetrievalEcho>,
    pub replay_dir: Option<String>,
    pub parallelism: usize,
    pub limit: Option<usize>,
}

/// The run's complete result. Serializations are deterministic: stable
/// field order, no timestamps, and the aggregate always recomputable from
/// the rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub metric_name: String,
    pub metric_value: Option<f64>,
    pub evaluated: usize,
    pub failed: usize,
    pub recall_at_k: Option<f64>,
    pub total_wall_clock_ms: u128,
    pub warnings: Vec<String>,
    pub rows: Vec<ClaimRow>,
}

impl EvalReport {
    /// Recomputes the aggregate from the per-claim rows; report
    /// self-consistency means this equals `metric_value` exactly.
    pub fn recompute_metric(&self, spec: &DatasetSpec) -> Result<Option<f64>, BenchError> {
        let mut preds = Vec::new();
        let mut golds = Vec::new();
        for row in &self.rows {
            if let (Some(p), Some(g)) = (&row.prediction, &row.gold) {
                let p = Verdict::parse(p)
                    .ok_or_else(|| BenchError::Dataset(format!("bad prediction {p:?}")))?;
                let g = Verdict::parse(g)
                    .ok_or_else(|| BenchError::Dataset(format!("bad gold {g:?}")))?;
                preds.push(p);
                golds.push(g);
            }
        }
        if preds.is_empty() {
            return Ok(None);
        }
        Ok(Some(score(spec, &preds, &golds)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat per-claim table for downstream analysis.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["id", "gold", "prediction", "rounds", "exhausted", "wall_clock_ms"])
            .expect("header writes");
        for row in &self.rows {
            writer
                .write_record([
                    row.id.as_str(),
                    row.gold.as_deref().unwrap_or(""),
                    row.prediction.as_deref().unwrap_or(""),
                    &row.rounds.to_string(),
                    &row.exhausted.to_string(),
                    &row.wall_clock_ms.to_string(),
                ])
                .expect("row writes");
        }
        String::from_utf8(writer.into_inner().expect("csv buffer")).expect("csv is UTF-8")
    }

    /// The self-describing text form of the report.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# Evaluation report\n\n");
        out.push_str(&format!("dataset: {}\n", self.config.dataset));
        out.push_str(&format!("variant: {}\n", self.config.variant));
        out.push_str(&format!("metric: {}\n", self.metric_name));
        match self.metric_value {
            Some(v) => out.push_str(&format!("metric_value: {v}\n")),
            None => out.push_str("metric_value: n/a\n"),
        }
        out.push_str(&format!("evaluated: {}\n", self.evaluated));
        out.push_str(&format!("failed: {}\n", self.failed));
        if let Some(r) = self.recall_at_k {
            out.push_str(&format!("recall_at_k: {r}\n"));
        }
        out.push_str(&format!(
            "total_wall_clock_ms: {}\n",
            self.total_wall_clock_ms
        ));
        for warning in &self.warnings {
            out.push_str(&format!("warning: {warning}\n"));
        }
        out.push_str("\nid\tgold\tprediction\trounds\texhausted\twall_clock_ms\terror\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                row.id,
                row.gold.as_deref().unwrap_or("-"),
                row.prediction.as_deref().unwrap_or("-"),
                row.rounds,
                row.exhausted,
                row.wall_clock_ms,
                row.error.as_deref().unwrap_or("-"),
            ));
        }
        out
    }
}

fn config_echo(cfg: &RunConfig) -> ConfigEcho {
    ConfigEcho {
        dataset: cfg.dataset.name.token().to_string(),
        scheme: match cfg.dataset.scheme {
            LabelScheme::TwoWay => "2-way".into(),
            LabelScheme::ThreeWay => "3-way".into(),
        },
        metric: cfg.dataset.metric.token().to_string(),
        setting: match cfg.dataset.setting {
            Setting::Closed => "closed".into(),
            Setting::Open => "open".into(),
        },
        data_path: cfg.data_path.display().to_string(),
        variant: cfg.variant.token().to_string(),
        bindings: cfg
            .bindings
            .iter()
            .map(|b| (b.role.name().to_string(), b.endpoint.clone()))
            .collect(),
        retrieval: cfg.retrieval.as_ref().map(|r| RetrievalEcho {
            method: match r.method {
                RetrievalMethod::Bm25 => "bm25".into(),
                RetrievalMethod::Embedding => "embedding".into(),
            },
            k: r.k,
            k1: r.k1,
            b: r.b,
            endpoint: r.endpoint.clone(),
        }),
        replay_dir: cfg.replay_dir.as_ref().map(|p| p.display().to_string()),
        parallelism: cfg.parallelism,
        limit: cfg.limit,
    }
}

// ---------------------------------------------------------------------------
// Runner

struct ClaimResult {
    prediction: Option<Verdict>,
    exhausted: bool,
    rounds: usize,
    wall_clock_ms: u128,
    error: Option<ClaimFailure>,
}

enum ClaimFailure {
    Gateway(GatewayError),
    Other(String),
}

impl ClaimFailure {
    fn message(&self) -> String {
        match self {
            ClaimFailure::Gateway(e) => format!("gateway: {e}"),
            ClaimFailure::Other(m) => m.clone(),
        }
    }
}

fn run_baseline_claim(
    cfg: &RunConfig,
    prompts: &BaselinePrompts,
    record: &Record,
    gateway: &Gateway,
) -> ClaimResult {
    let binding = cfg
        .binding(AgentRole::Executor)
        .expect("validated before dispatch");
    let prompt = prompts.render(cfg.variant, record, cfg.dataset.scheme);
    let request = ChatRequest {
        endpoint: binding.endpoint.clone(),
        messages: vec![ChatMessage::user(prompt)],
        params: binding.params.clone(),
    };
    match gateway.complete(&request) {
        Ok(response) => {
            let wall_clock_ms = response.latency.as_millis();
            match parse_agent_verdict(&response.content, cfg.dataset.scheme) {
                Ok(v) => match v.outcome {
                    Outcome::Final(verdict) => ClaimResult {
                        prediction: Some(verdict),
                        exhausted: false,
                        rounds: 1,
                        wall_clock_ms,
                        error: None,
                    },
                    Outcome::Revise => ClaimResult {
                        prediction: None,
                        exhausted: false,
                        rounds: 1,
                        wall_clock_ms,
                        error: Some(ClaimFailure::Other(
                            "baseline reply asked for revision instead of a verdict".into(),
                        )),
                    },
                },
                Err(e) => ClaimResult {
                    prediction: None,
                    exhausted: false,
                    rounds: 1,
                    wall_clock_ms,
                    error: Some(ClaimFailure::Other(format!("unparseable reply: {e}"))),
                },
            }
        }
        Err(e) => ClaimResult {
            prediction: None,
            exhausted: false,
            rounds: 0,
            wall_clock_ms: 0,
            error: Some(ClaimFailure::Gateway(e)),
        },
    }
}

fn run_conversational_claim(
    cfg: &RunConfig,
    record: &Record,
    templates: &TemplateSet,
    gateway: &Gateway,
) -> ClaimResult {
    let variant = cfg
        .variant
        .conversational()
        .expect("dispatch checked the variant");
    let policy = ConversationPolicy::new(variant, cfg.dataset.scheme);
    let task = VerificationTask {
        claim: record.claim.clone(),
        evidence: record.evidence.clone(),
        scheme: cfg.dataset.scheme,
        setting: cfg.dataset.setting,
    };
    let bindings: Vec<AgentBinding> = cfg
        .bindings
        .iter()
        .filter(|b| variant.uses_verifier() || b.role != AgentRole::Verifier)
        .cloned()
        .collect();
    match run_conversation(&task, &bindings, &policy, templates, gateway) {
        Ok(outcome) => ClaimResult {
            prediction: Some(outcome.verdict),
            exhausted: outcome.exhausted,
            rounds: outcome.transcript.round_count(),
            wall_clock_ms: outcome.wall_clock.as_millis(),
            error: None,
        },
        Err(OrchestratorError::Gateway { source, transcript }) => ClaimResult {
            prediction: None,
            exhausted: false,
            rounds: transcript.round_count(),
            wall_clock_ms: 0,
            error: Some(ClaimFailure::Gateway(source)),
        },
        Err(e) => ClaimResult {
            prediction: None,
            exhausted: false,
            rounds: 0,
            wall_clock_ms: 0,
            error: Some(ClaimFailure::Other(e.to_string())),
        },
    }
}

/// Ensures every record has evidence to verify against, retrieving it at
/// run time for open datasets when configured. Returns the effective
/// records and, for open runs, the retrieval recall when computable.
fn prepare_records(
    cfg: &RunConfig,
    mut records: Vec<Record>,
    embedder: Option<&dyn Embedder>,
) -> Result<(Vec<Record>, Option<f64>), BenchError> {
    let needs_evidence = records.iter().any(|r| r.evidence.is_empty());
    if cfg.dataset.setting == Setting::Open {
        if let Some(retrieval) = &cfg.retrieval {
            let k = retrieval.k;
            let build = build_scitab_od(&records, retrieval, embedder, k)?;
            let recall = recall_from_records(&build.records);
            return Ok((build.records, recall));
        }
        if needs_evidence {
            return Err(BenchError::Config(
                "open-setting run needs a retrieval config or pre-retrieved evidence".into(),
            ));
        }
        return Ok((recall_pass_through(&mut records), recall_from_records(&records)));
    }
    if needs_evidence {
        return Err(BenchError::Dataset(
            "closed-setting records must carry evidence".into(),
        ));
    }
    Ok((records, None))
}

fn recall_pass_through(records: &mut Vec<Record>) -> Vec<Record> {
    std::mem::take(records)
}

/// Runs one configuration end to end and assembles the report.
///
/// Rows keep the input order regardless of worker interleaving. A replay
/// cache miss aborts the run (the store cannot answer it), while other
/// per-claim failures are recorded and excluded from the metric.
pub fn run_benchmark(
    cfg: &RunConfig,
    templates: &TemplateSet,
    prompts: &BaselinePrompts,
    gateway: &Gateway,
    embedder: Option<&dyn Embedder>,
) -> Result<EvalReport, BenchError> {
    cfg.validate()?;
    let loaded = load_dataset(&cfg.dataset, &cfg.data_path)?;
    let mut warnings = loaded.warnings;
    let (mut records, recall) = prepare_records(cfg, loaded.records, embedder)?;
    if let Some(limit) = cfg.limit {
        records.truncate(limit);
    }
    if records.is_empty() {
        return Err(BenchError::Dataset("no claims after limit".into()));
    }

    let slots: Vec<Mutex<Option<ClaimResult>>> =
        records.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cfg.parallelism.min(records.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= records.len() {
                    break;
                }
                let record = &records[i];
                let result = match cfg.variant {
                    Variant::WCot | Variant::WoCot => {
                        run_baseline_claim(cfg, prompts, record, gateway)
                    }
                    _ => run_conversational_claim(cfg, record, templates, gateway),
                };
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });

    let mut rows = Vec::with_capacity(records.len());
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    let mut failed = 0usize;
    let mut total_wall = 0u128;
    for (record, slot) in records.iter().zip(slots) {
        let result = slot
            .into_inner()
            .expect("slot lock")
            .expect("every slot filled");
        if let Some(ClaimFailure::Gateway(GatewayError::CacheMiss { .. })) = &result.error {
            let Some(ClaimFailure::Gateway(e)) = result.error else {
                unreachable!()
            };
            return Err(BenchError::Gateway(e));
        }
        total_wall += result.wall_clock_ms;
        if result.error.is_some() {
            failed += 1;
        } else if let (Some(p), Some(g)) = (result.prediction, record.claim.gold_label) {
            preds.push(p);
            golds.push(g);
        }
        rows.push(ClaimRow {
            id: record.claim.id.clone(),
            prediction: result.prediction.map(|v| v.token().to_string()),
            gold: record.claim.gold_label.map(|v| v.token().to_string()),
            exhausted: result.exhausted,
            rounds: result.rounds,
            wall_clock_ms: result.wall_clock_ms,
            error: result.error.as_ref().map(ClaimFailure::message),
        });
    }
    let metric_value = if preds.is_empty() {
        None
    } else {
        Some(score(&cfg.dataset, &preds, &golds)?)
    };
    if metric_value.is_none() {
        warnings.push("no claims produced a scorable (prediction, gold) pair".into());
    }
    Ok(EvalReport {
        config: config_echo(cfg),
        metric_name: cfg.dataset.metric.token().to_string(),
        metric_value,
        evaluated: preds.len(),
        failed,
        recall_at_k: recall,
        total_wall_clock_ms: total_wall,
        warnings,
        rows,
    })
}

/// Recall evaluation over an open dataset: ranks every claim against the
/// dataset's own table corpus at each requested depth.
pub fn evaluate_recall(
    records: &[Record],
    config: &RetrievalConfig,
    embedder: Option<&dyn Embedder>,
    ks: &[usize],
) -> Result<Vec<(usize, f64)>, BenchError> {
    let (corpus, _) = build_table_corpus(records)?;
    if corpus.is_empty() {
        return Err(BenchError::Dataset("records carry no tables".into()));
    }
    let retriever = match config.method {
        RetrievalMethod::Bm25 => Retriever::bm25(corpus, config.clone())?,
        RetrievalMethod::Embedding => {
            let embedder = embedder.ok_or_else(|| {
                BenchError::Config("embedding retrieval needs an embedder".into())
            })?;
            Retriever::embedding(corpus, config.clone(), embedder)?
        }
    };
    let mut gold = std::collections::BTreeMap::new();
    for record in records {
        let gold_docs: BTreeSet<String> = if record.gold_docs.is_empty() {
            record.evidence.tables.iter().map(table_doc_id).collect()
        } else {
            record.gold_docs.iter().cloned().collect()
        };
        if gold_docs.is_empty() {
            return Err(BenchError::Dataset(format!(
                "claim {} has no gold tables",
                record.claim.id
            )));
        }
        gold.insert(record.claim.id.clone(), gold_docs);
    }
    let mut curve = Vec::new();
    for &k in ks {
        let mut results = Vec::new();
        for record in records {
            results.push(retriever.retrieve_k(
                &record.claim.id,
                &record.claim.text,
                embedder,
                k,
            )?);
        }
        curve.push((k, recall_at_k(&results, &gold)?));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{Cell, Claim, EvidenceBundle, Row};
    use crate::gateway::{Gateway, ModelEndpoint, ScriptStep};
    use Verdict::{NotEnoughInfo as N, Refute as R, Support as S};

    fn table(caption: &str, value: &str) -> Table {
        Table::new(
            caption,
            vec!["A".into()],
            vec![Row {
                label: "r".into(),
                cells: vec![Cell::new(value)],
            }],
        )
        .unwrap()
    }

    fn record(id: &str, label: Option<Verdict>, caption: &str) -> Record {
        Record {
            claim: Claim {
                id: id.into(),
                text: format!("claim about {caption}"),
                gold_label: label,
            },
            evidence: EvidenceBundle {
                tables: vec![table(caption, "1")],
                paragraphs: vec![],
            },
            gold_docs: vec![],
            retrieved_docs: vec![],
        }
    }

    fn write_native(dir: &Path, records: &[Record]) -> PathBuf {
        let path = dir.join("data.jsonl");
        write_records(&path, records).unwrap();
        path
    }

    #[test]
    fn macro_f1_matches_the_hand_oracle() {
        let v = macro_f1(&[S, S, R], &[S, R, R], &[S, R]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_counts_absent_classes_unless_restricted() {
        let preds = [S, S];
        let golds = [S, S];
        let fixed = macro_f1(&preds, &golds, LabelScheme::ThreeWay.labels()).unwrap();
        assert!((fixed - 1.0 / 3.0).abs() < 1e-12);
        let present =
            macro_f1_over(&preds, &golds, LabelScheme::ThreeWay.labels(), true).unwrap();
        assert!((present - 1.0).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_rejects_labels_outside_the_class_set() {
        assert_eq!(
            macro_f1(&[N], &[S], &[S, R]),
            Err(MetricError::UnknownLabel("not enough info".into()))
        );
    }

    #[test]
    fn micro_f1_matches_the_hand_oracle_and_accuracy() {
        let preds = [S, R, N];
        let golds = [S, S, N];
        let micro = micro_f1(&preds, &golds).unwrap();
        assert!((micro - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(micro, accuracy(&preds, &golds).unwrap());
    }

    #[test]
    fn metrics_reject_empty_and_mismatched_inputs() {
        assert_eq!(accuracy(&[], &[]), Err(MetricError::EmptyInput));
        assert_eq!(
            micro_f1(&[S], &[S, R]),
            Err(MetricError::LengthMismatch { preds: 1, golds: 2 })
        );
    }

    #[test]
    fn dataset_profiles_pin_scheme_metric_and_sizes() {
        let scitab = DatasetSpec::builtin(DatasetName::SciTab);
        assert_eq!(scitab.scheme, LabelScheme::ThreeWay);
        assert_eq!(scitab.setting, Setting::Closed);
        assert_eq!((scitab.expected_claims, scitab.expected_tables), (1224, 213));
        let od = DatasetSpec::builtin(DatasetName::SciTabOd);
        assert_eq!(od.scheme, LabelScheme::TwoWay);
        assert_eq!(od.setting, Setting::Open);
        assert_eq!(od.metric, MetricKind::MacroF1);
        assert_eq!((od.expected_claims, od.expected_tables), (868, 213));
        assert_eq!(
            DatasetSpec::builtin(DatasetName::FinDVerTestmini).expected_claims,
            700
        );
        assert_eq!(DatasetName::parse("FinDVer-TM"), Some(DatasetName::FinDVerTestmini));
    }

    #[test]
    fn load_dataset_counts_and_warns() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            record("c1", Some(S), "alpha"),
            record("c2", Some(R), "beta"),
            record("c3", Some(N), "gamma"),
        ];
        let path = write_native(dir.path(), &records);
        let loaded = load_dataset(&DatasetSpec::builtin(DatasetName::SciTab), &path).unwrap();
        assert_eq!(loaded.records.len(), 3);
        assert_eq!(loaded.warnings.len(), 2);
        assert!(loaded.warnings[0].contains("expected 1224"));
    }

    #[test]
    fn load_dataset_reads_the_published_scitab_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scitab.jsonl");
        let line = serde_json::json!({
            "table_id": "T1",
            "table_caption": "Results",
            "table_column_names": ["Model", "Score"],
            "table_content_values": [["[BOLD] Ours", "42"]],
            "claim": "ours scores 42",
            "label": "supports",
        });
        fs::write(&path, format!("{line}\n")).unwrap();
        let loaded = load_dataset(&DatasetSpec::builtin(DatasetName::SciTab), &path).unwrap();
        assert_eq!(loaded.records.len(), 1);
        assert_eq!(loaded.records[0].claim.gold_label, Some(S));
        assert_eq!(loaded.records[0].evidence.tables[0].rows[0].label, "Ours");
    }

    #[test]
    fn build_scitab_od_drops_nei_and_attaches_top_k() {
        let records = vec![
            record("c1", Some(S), "water use by year"),
            record("c2", Some(R), "rainfall by region"),
            record("c3", Some(N), "snowfall by month"),
            record("c4", Some(S), "water use by year"),
        ];
        let config = RetrievalConfig::new(RetrievalMethod::Bm25, 2);
        let build = build_scitab_od(&records, &config, None, 2).unwrap();
        // c3 dropped; c1/c4 share one deduplicated table.
        assert_eq!(build.records.len(), 3);
        assert_eq!(build.corpus.len(), 3);
        for r in &build.records {
            assert_eq!(r.evidence.tables.len(), 2);
            assert_eq!(r.retrieved_docs.len(), 2);
            assert_eq!(r.gold_docs.len(), 1);
        }
        // The claim text mentions its own caption, so gold ranks first.
        let recall = build.recall().unwrap();
        assert!((recall - 1.0).abs() < 1e-12, "recall {recall}");
    }

    fn scripted_gateway(replies: Vec<&str>) -> Gateway {
        Gateway::scripted(
            vec![ModelEndpoint::new("m"), ModelEndpoint::new("m2")],
            replies
                .into_iter()
                .map(|r| ScriptStep::Reply(r.to_string()))
                .collect(),
        )
    }

    const PLANNER_OK: &str =
        "<explanation>check</explanation><plan>read the cell; compare</plan>";

    fn conversational_replies(n: usize, verdict: &str) -> Vec<String> {
        let executor = format!("<explanation>checked</explanation>\n{verdict}");
        let verifier = format!("<explanation>sound</explanation>\n{verdict}");
        (0..n)
            .flat_map(|_| {
                vec![PLANNER_OK.to_string(), executor.clone(), verifier.clone()]
            })
            .collect()
    }

    #[test]
    fn run_benchmark_scores_a_scripted_pev_run() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            record("c1", Some(S), "alpha"),
            record("c2", Some(S), "beta"),
            record("c3", Some(R), "gamma"),
        ];
        let path = write_native(dir.path(), &records);
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            &path,
            Variant::PevSame,
        );
        cfg.bindings = vec![
            AgentBinding::new(AgentRole::Planner, "m"),
            AgentBinding::new(AgentRole::Executor, "m"),
            AgentBinding::new(AgentRole::Verifier, "m"),
        ];
        let gateway = Gateway::scripted(
            vec![ModelEndpoint::new("m")],
            conversational_replies(3, "support")
                .into_iter()
                .map(ScriptStep::Reply)
                .collect(),
        );
        let report = run_benchmark(
            &cfg,
            &TemplateSet::builtin(),
            &BaselinePrompts::builtin(),
            &gateway,
            None,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.evaluated, 3);
        assert_eq!(report.failed, 0);
        // Predictions all "support": per-class F1 = (4/5, 0, 0)/3.
        let expected = (2.0 * 2.0 / (2.0 * 2.0 + 1.0)) / 3.0;
        assert!((report.metric_value.unwrap() - expected).abs() < 1e-12);
        assert_eq!(
            report.recompute_metric(&cfg.dataset).unwrap(),
            report.metric_value
        );
        assert_eq!(report.rows[0].rounds, 4);
    }

    #[test]
    fn baseline_variants_issue_one_call_per_claim() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![record("c1", Some(S), "alpha"), record("c2", Some(R), "beta")];
        let path = write_native(dir.path(), &records);
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            &path,
            Variant::WoCot,
        );
        cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "m")];
        let gateway = scripted_gateway(vec!["support", "refute"]);
        let report = run_benchmark(
            &cfg,
            &TemplateSet::builtin(),
            &BaselinePrompts::builtin(),
            &gateway,
            None,
        )
        .unwrap();
        assert_eq!(report.evaluated, 2);
        // Both correct, but NEI never occurs: macro over the fixed 3-class
        // set is (1 + 1 + 0) / 3.
        assert!((report.metric_value.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(report.rows.iter().all(|r| r.rounds == 1));
    }

    #[test]
    fn failed_claims_are_recorded_and_excluded() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![record("c1", Some(S), "alpha"), record("c2", Some(S), "beta")];
        let path = write_native(dir.path(), &records);
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            &path,
            Variant::WoCot,
        );
        cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "m")];
        // Second claim gets junk that parses to no verdict twice.
        let gateway = scripted_gateway(vec!["support", "no opinion here"]);
        let report = run_benchmark(
            &cfg,
            &TemplateSet::builtin(),
            &BaselinePrompts::builtin(),
            &gateway,
            None,
        )
        .unwrap();
        assert_eq!(report.evaluated, 1);
        assert_eq!(report.failed, 1);
        assert!(report.rows[1].error.as_deref().unwrap().contains("unparseable"));
        // One correct support pair; the other two classes are absent.
        assert!((report.metric_value.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn open_setting_without_retrieval_or_evidence_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut bare = record("c1", Some(S), "alpha");
        bare.evidence = EvidenceBundle::default();
        let path = write_native(dir.path(), &[bare]);
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::FinDVerTestmini),
            &path,
            Variant::WoCot,
        );
        cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "m")];
        let err = run_benchmark(
            &cfg,
            &TemplateSet::builtin(),
            &BaselinePrompts::builtin(),
            &scripted_gateway(vec![]),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, BenchError::Config(_)), "{err}");
    }

    #[test]
    fn pev_indep_requires_distinct_endpoints() {
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            "unused",
            Variant::PevIndep,
        );
        cfg.bindings = vec![
            AgentBinding::new(AgentRole::Planner, "m"),
            AgentBinding::new(AgentRole::Executor, "m"),
            AgentBinding::new(AgentRole::Verifier, "m"),
        ];
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
        cfg.bindings[2].endpoint = "m2".into();
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn zero_limit_is_a_dataset_error() {
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            "unused",
            Variant::WoCot,
        );
        cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "m")];
        cfg.limit = Some(0);
        assert!(matches!(cfg.validate(), Err(BenchError::Dataset(_))));
    }

    #[test]
    fn report_exports_are_deterministic_documents() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![record("c1", Some(S), "alpha")];
        let path = write_native(dir.path(), &records);
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            &path,
            Variant::WoCot,
        );
        cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "m")];
        let report = run_benchmark(
            &cfg,
            &TemplateSet::builtin(),
            &BaselinePrompts::builtin(),
            &scripted_gateway(vec!["support"]),
            None,
        )
        .unwrap();
        let json = report.to_json();
        assert!(json.contains("\"metric_name\": \"macro_f1\""));
        let csv = report.to_csv();
        assert!(csv.starts_with("id,gold,prediction,rounds,exhausted,wall_clock_ms"));
        assert!(csv.contains("c1,support,support,1,false"));
        let text = report.render_text();
        assert!(text.contains("dataset: SciTab"));
        assert!(!text.to_lowercase().contains("timestamp"));
    }

    #[test]
    fn recall_curve_is_monotone_on_a_synthetic_corpus() {
        let records: Vec<Record> = (0..20)
            .map(|i| {
                let label = if i % 2 == 0 { S } else { R };
                record(&format!("c{i}"), Some(label), &format!("topic{i} detail"))
            })
            .collect();
        let config = RetrievalConfig::new(RetrievalMethod::Bm25, 10);
        let curve = evaluate_recall(&records, &config, None, &[1, 3, 5, 10, 20]).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[0].1 <= pair[1].1, "recall must not drop with k");
        }
        assert!((curve.last().unwrap().1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_run_keeps_input_order() {
        let dir = tempfile::tempdir().unwrap();
        let records: Vec<Record> = (0..8)
            .map(|i| record(&format!("c{i}"), Some(S), &format!("cap{i}")))
            .collect();
        let path = write_native(dir.path(), &records);
        let mut cfg = RunConfig::new(
            DatasetSpec::builtin(DatasetName::SciTab),
            &path,
            Variant::WoCot,
        );
        cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "m")];
        cfg.parallelism = 4;
        let gateway = scripted_gateway(vec!["support"; 8]);
        let report = run_benchmark(
            &cfg,
            &TemplateSet::builtin(),
            &BaselinePrompts::builtin(),
            &gateway,
            None,
        )
        .unwrap();
        let ids: Vec<&str> = report.rows.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, (0..8).map(|i| format!("c{i}")).collect::<Vec<_>>()
            .iter().map(String::as_str).collect::<Vec<_>>());
    }
}
