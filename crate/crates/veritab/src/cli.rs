//! Command-line entry points.
//!
//! Four subcommands: `verify` drives one claim through the group chat and
//! exports its transcript, `bench` runs a configuration variant over a
//! dataset and writes the evaluation report, `retrieval-eval` measures
//! gold-coverage recall across ranking depths, and `build-od` rebuilds a
//! closed dataset as its open-domain variant.
//!
//! Everything is file-first: a TOML config declares endpoints, per-variant
//! role bindings, dataset paths, and retrieval settings, while flags only
//! select among or override declared values. Outputs land in a fresh run
//! directory named by a timestamp plus the config digest, so runs never
//! overwrite each other. Exit codes are fixed: 0 success, 2 configuration
//! error, 3 gateway or model failure, 4 replay cache miss, 5 dataset error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::agents::{AgentBinding, AgentRole, TemplateSet};
use crate::bench::{
    build_scitab_od, evaluate_recall, load_dataset, run_benchmark, write_records, BaselinePrompts,
    BenchError, DatasetName, DatasetSpec, RunConfig, Variant,
};
use crate::evidence::{Claim, LabelScheme, Setting};
use crate::gateway::{Gateway, GatewayError, GenerationParams, Mode, ModelEndpoint};
use crate::orchestrator::{
    export_transcript, run_conversation, ConversationPolicy, OrchestratorError, VerificationTask,
};
use crate::retrieval::{
    CachedEmbedder, Embedder, HashEmbedder, HttpEmbedder, RetrievalConfig, RetrievalError,
    RetrievalMethod,
};

// ---------------------------------------------------------------------------
// Errors and exit codes

/// The full error taxonomy; exit codes are a total function of it.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid config, unresolved references.
    Config(String),
    /// Model or transport failure, including unusable model output.
    Gateway(String),
    /// Replay mode asked the store for an unrecorded request.
    CacheMiss(String),
    /// Unreadable, malformed, or empty data.
    Dataset(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Gateway(_) => 3,
            CliError::CacheMiss(_) => 4,
            CliError::Dataset(_) => 5,
        }
    }

    fn describe(&self) -> String {
        match self {
            CliError::Config(m) => format!("configuration error: {m}"),
            CliError::Gateway(m) => format!("gateway failure: {m}"),
            CliError::CacheMiss(m) => format!("replay cache miss: {m}"),
            CliError::Dataset(m) => format!("dataset error: {m}"),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::CacheMiss { digest } => CliError::CacheMiss(digest),
            other => CliError::Gateway(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(m) => CliError::Config(m),
            BenchError::Gateway(g) => g.into(),
            BenchError::Retrieval(r) => r.into(),
            BenchError::Dataset(m) => CliError::Dataset(m),
            malformed @ BenchError::Malformed { .. } => CliError::Dataset(malformed.to_string()),
            BenchError::Metric(m) => CliError::Dataset(m.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::CacheMiss(d) => CliError::CacheMiss(d),
            RetrievalError::InvalidK => CliError::Config(e.to_string()),
            RetrievalError::Gateway(g) => g.into(),
            other => CliError::Dataset(other.to_string()),
        }
    }
}

impl From<OrchestratorError> for CliError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::Gateway { source, .. } => source.into(),
            OrchestratorError::Policy(m) => CliError::Config(m),
            OrchestratorError::EmptyEvidence => {
                CliError::Dataset("evidence file holds no evidence".into())
            }
            parse @ OrchestratorError::Parse { .. } => CliError::Gateway(parse.to_string()),
            illegal @ OrchestratorError::IllegalState(_) => CliError::Gateway(illegal.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Config file

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    endpoints: Vec<FileEndpoint>,
    /// variant token -> role name -> endpoint id.
    #[serde(default)]
    bindings: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    templates_dir: Option<String>,
    #[serde(default)]
    replay_dir: Option<String>,
    /// dataset name -> JSONL path.
    #[serde(default)]
    datasets: BTreeMap<String, String>,
    #[serde(default)]
    retrieval: Option<FileRetrieval>,
    #[serde(default)]
    default_variant: Option<String>,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    parallelism: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEndpoint {
    id: String,
    #[serde(default)]
    url: String,
    #[serde(default)]
    model: String,
    #[serde(default)]
    auth_env: Option<String>,
    #[serde(default)]
    rate_limit: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRetrieval {
    method: String,
    k: usize,
    #[serde(default)]
    k1: Option<f64>,
    #[serde(default)]
    b: Option<f64>,
    #[serde(default)]
    endpoint: Option<String>,
}

/// The validated configuration: endpoints resolved, bindings checked
/// against declared endpoints, referenced paths known to exist.
pub struct CliConfig {
    pub endpoints: Vec<ModelEndpoint>,
    bindings: BTreeMap<String, BTreeMap<String, String>>,
    pub templates: TemplateSet,
    pub replay_dir: Option<PathBuf>,
    pub datasets: BTreeMap<String, PathBuf>,
    pub retrieval: Option<RetrievalConfig>,
    pub default_variant: Option<Variant>,
    pub default_mode: Option<Mode>,
    pub parallelism: usize,
    /// First 8 hex digits of the config file digest; names run directories.
    pub digest: String,
}

fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s {
        "live" => Ok(Mode::Live),
        "record" => Ok(Mode::Record),
        "replay" => Ok(Mode::Replay),
        other => Err(CliError::Config(format!(
            "unknown mode {other:?} (expected live, record, or replay)"
        ))),
    }
}

fn parse_variant(s: &str) -> Result<Variant, CliError> {
    Variant::parse(s).ok_or_else(|| {
        CliError::Config(format!(
            "unknown variant {s:?} (expected wCOT, woCOT, PE, PEV_same, or PEV_indep)"
        ))
    })
}

fn parse_role(s: &str) -> Result<AgentRole, CliError> {
    match s {
        "planner" => Ok(AgentRole::Planner),
        "executor" => Ok(AgentRole::Executor),
        "verifier" => Ok(AgentRole::Verifier),
        other => Err(CliError::Config(format!(
            "unknown binding role {other:?} (expected planner, executor, or verifier)"
        ))),
    }
}

impl CliConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<CliConfig, CliError> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let digest = hex::encode(Sha256::digest(raw.as_bytes()))[..8].to_string();
        let file: FileConfig = toml::from_str(&raw)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));

        let mut endpoints = Vec::new();
        for ep in &file.endpoints {
            if endpoints.iter().any(|e: &ModelEndpoint| e.id == ep.id) {
                return Err(CliError::Config(format!("duplicate endpoint id {:?}", ep.id)));
            }
            let mut endpoint = ModelEndpoint::new(&ep.id);
            endpoint.base_url = ep.url.clone();
            endpoint.model = ep.model.clone();
            endpoint.auth_env = ep.auth_env.clone();
            if let Some(limit) = ep.rate_limit {
                endpoint.rate_limit = limit;
            }
            endpoints.push(endpoint);
        }
        for (variant, roles) in &file.bindings {
            parse_variant(variant)?;
            for (role, endpoint) in roles {
                parse_role(role)?;
                if !endpoints.iter().any(|e| &e.id == endpoint) {
                    return Err(CliError::Config(format!(
                        "binding {variant}.{role} references undeclared endpoint {endpoint:?}"
                    )));
                }
            }
        }

        let templates = match &file.templates_dir {
            Some(dir) => {
                let dir = base.join(dir);
                TemplateSet::from_dir(&dir)
                    .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
            }
            None => TemplateSet::builtin(),
        };
        let mut datasets = BTreeMap::new();
        for (name, rel) in &file.datasets {
            if DatasetName::parse(name).is_none() {
                return Err(CliError::Config(format!("unknown dataset name {name:?}")));
            }
            let path = base.join(rel);
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "dataset {name} path {} does not exist",
                    path.display()
                )));
            }
            datasets.insert(name.clone(), path);
        }
        let retrieval = match &file.retrieval {
            Some(r) => {
                let method = match r.method.as_str() {
                    "bm25" => RetrievalMethod::Bm25,
                    "embedding" => RetrievalMethod::Embedding,
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown retrieval method {other:?}"
                        )))
                    }
                };
                if let Some(endpoint) = &r.endpoint {
                    if !endpoints.iter().any(|e| &e.id == endpoint) {
                        return Err(CliError::Config(format!(
                            "retrieval endpoint {endpoint:?} is not declared"
                        )));
                    }
                }
                let mut config = RetrievalConfig::new(method, r.k);
                config.endpoint = r.endpoint.clone();
                if let Some(k1) = r.k1 {
                    config.k1 = k1;
                }
                if let Some(b) = r.b {
                    config.b = b;
                }
                config.validate().map_err(CliError::from)?;
                config
            }
            None => RetrievalConfig::default(),
        };
        let retrieval = file.retrieval.as_ref().map(|_| retrieval);
        let default_variant = file
            .default_variant
            .as_deref()
            .map(parse_variant)
            .transpose()?;
        let default_mode = file.mode.as_deref().map(parse_mode).transpose()?;
        Ok(CliConfig {
            endpoints,
            bindings: file.bindings,
            templates,
            replay_dir: file.replay_dir.as_ref().map(|d| base.join(d)),
            datasets,
            retrieval,
            default_variant,
            default_mode,
            parallelism: file.parallelism.unwrap_or(1).max(1),
            digest,
        })
    }

    /// The role bindings declared for a variant.
    pub fn bindings_for(&self, variant: Variant) -> Result<Vec<AgentBinding>, CliError> {
        let roles = self.bindings.get(variant.token()).ok_or_else(|| {
            CliError::Config(format!("no bindings declared for variant {}", variant.token()))
        })?;
        let mut out = Vec::new();
        for (role, endpoint) in roles {
            out.push(AgentBinding {
                role: parse_role(role)?,
                endpoint: endpoint.clone(),
                params: GenerationParams::default(),
            });
        }
        out.sort_by_key(|b| b.role);
        Ok(out)
    }

    /// Builds the gateway for a mode: HTTP transport, wrapped by the
    /// replay store for record and replay runs.
    pub fn gateway(&self, mode: Mode) -> Result<Gateway, CliError> {
        let gateway = Gateway::http(self.endpoints.clone()).map_err(CliError::from)?;
        match mode {
            Mode::Live => Ok(gateway),
            Mode::Record | Mode::Replay => {
                let dir = self.replay_dir.as_ref().ok_or_else(|| {
                    CliError::Config("record/replay modes need replay_dir in the config".into())
                })?;
                gateway.with_replay(dir, mode).map_err(CliError::from)
            }
        }
    }

    /// The embedder for embedding retrieval: the configured endpoint when
    /// declared (with the replay-aware cache), the deterministic mock
    /// otherwise.
    pub fn embedder(&self, mode: Mode) -> Result<Option<Box<dyn Embedder>>, CliError> {
        let Some(retrieval) = &self.retrieval else {
            return Ok(None);
        };
        if retrieval.method != RetrievalMethod::Embedding {
            return Ok(None);
        }
        let inner: Box<dyn Embedder> = match &retrieval.endpoint {
            Some(id) => {
                let endpoint = self
                    .endpoints
                    .iter()
                    .find(|e| &e.id == id)
                    .ok_or_else(|| {
                        CliError::Config(format!("retrieval endpoint {id:?} is not declared"))
                    })?
                    .clone();
                Box::new(HttpEmbedder::new(endpoint).map_err(CliError::from)?)
            }
            None => Box::new(HashEmbedder::default()),
        };
        match (&self.replay_dir, mode) {
            (Some(dir), Mode::Record | Mode::Replay) => Ok(Some(Box::new(ReplayEmbedder {
                inner,
                dir: dir.join("embeddings"),
                mode,
            }))),
            _ => Ok(Some(inner)),
        }
    }

    pub fn dataset_path(&self, name: DatasetName) -> Result<&PathBuf, CliError> {
        self.datasets.get(name.token()).ok_or_else(|| {
            CliError::Config(format!("no path configured for dataset {}", name.token()))
        })
    }
}

/// Owns an embedder plus the cache settings [`CachedEmbedder`] borrows;
/// builds the cache view per batch so the pair can move around as one value.
struct ReplayEmbedder {
    inner: Box<dyn Embedder>,
    dir: PathBuf,
    mode: Mode,
}

impl Embedder for ReplayEmbedder {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        CachedEmbedder::new(self.inner.as_ref(), &self.dir, self.mode)?.embed_batch(texts)
    }
}

// ---------------------------------------------------------------------------
// Argument shapes

#[derive(Debug, Parser)]
#[command(
    name = "veritab",
    about = "Claim verification over tabular evidence",
    version
)]
pub struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Accepted before or after the subcommand; global args cannot be
/// required, so the config path is checked at dispatch.
#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Gateway mode: live, record, or replay.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Parent directory for the run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn config_path(&self) -> Result<&Path, CliError> {
        self.config
            .as_deref()
            .ok_or_else(|| CliError::Config("--config is required".into()))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify one claim against an evidence file.
    Verify {
        /// Claim text; defaults to the claim in the evidence record.
        #[arg(long)]
        claim: Option<String>,
        /// Native JSONL file whose first record supplies the evidence.
        #[arg(long)]
        evidence: PathBuf,
        /// Conversation variant (default PEV_same).
        #[arg(long)]
        variant: Option<String>,
        /// Label scheme: 2-way or 3-way (default 3-way).
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Run one configuration variant over a dataset.
    Bench {
        /// Dataset name: SciTab, SemTab, FinDVer-TM, FinDVer-T, SciTab-OD.
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        variant: Option<String>,
        /// Cap on claims processed.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Measure retrieval recall across ranking depths.
    RetrievalEval {
        #[arg(long)]
        dataset: String,
        /// Comma-separated depths (default 3,5,10).
        #[arg(long)]
        ks: Option<String>,
    },
    /// Rebuild a closed dataset as its open-domain variant.
    BuildOd {
        /// Source dataset name (default SciTab).
        #[arg(long)]
        dataset: Option<String>,
        /// Tables attached per claim (default 2).
        #[arg(long)]
        k: Option<usize>,
    },
}

// ---------------------------------------------------------------------------
// Run directories

fn run_dir(common: &CommonArgs, digest: &str) -> Result<PathBuf, CliError> {
    let parent = common.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // Counter suffix keeps same-second runs from colliding.
    for attempt in 0.. {
        let name = if attempt == 0 {
            format!("{seconds}-{digest}")
        } else {
            format!("{seconds}-{digest}-{attempt}")
        };
        let dir = parent.join(name);
        match fs::create_dir_all(&dir) {
            Ok(()) if fs::read_dir(&dir).map(|mut d| d.next().is_none()).unwrap_or(false) => {
                return Ok(dir)
            }
            Ok(()) => continue,
            Err(e) => {
                return Err(CliError::Config(format!(
                    "cannot create run directory {}: {e}",
                    dir.display()
                )))
            }
        }
    }
    unreachable!("loop returns or errors")
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn resolve_mode(common: &CommonArgs, config: &CliConfig) -> Result<Mode, CliError> {
    match &common.mode {
        Some(m) => parse_mode(m),
        None => Ok(config.default_mode.unwrap_or(Mode::Live)),
    }
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_verify(
    common: &CommonArgs,
    claim: Option<String>,
    evidence_path: &Path,
    variant: Option<String>,
    scheme: Option<String>,
) -> Result<(), CliError> {
    let config = CliConfig::load(common.config_path()?)?;
    let mode = resolve_mode(common, &config)?;
    let scheme = match scheme.as_deref() {
        None | Some("3-way") => LabelScheme::ThreeWay,
        Some("2-way") => LabelScheme::TwoWay,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown scheme {other:?} (expected 2-way or 3-way)"
            )))
        }
    };
    let variant = match variant.as_deref() {
        Some(v) => parse_variant(v)?,
        None => config.default_variant.unwrap_or(Variant::PevSame),
    };
    let conv_variant = variant.conversational().ok_or_else(|| {
        CliError::Config(format!(
            "verify runs the group chat; use PE, PEV_same, or PEV_indep, not {}",
            variant.token()
        ))
    })?;

    let raw = fs::read_to_string(evidence_path).map_err(|e| {
        CliError::Dataset(format!("cannot read {}: {e}", evidence_path.display()))
    })?;
    let first = raw
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| CliError::Dataset("evidence file is empty".into()))?;
    let record = crate::evidence::load_record(
        first.as_bytes(),
        crate::evidence::RecordFormat::Native { scheme },
    )
    .map_err(|e| CliError::Dataset(e.to_string()))?;

    let task = VerificationTask {
        claim: Claim {
            id: record.claim.id.clone(),
            text: claim.unwrap_or_else(|| record.claim.text.clone()),
            gold_label: record.claim.gold_label,
        },
        evidence: record.evidence,
        scheme,
        setting: Setting::Closed,
    };
    let policy = ConversationPolicy::new(conv_variant, scheme);
    let bindings = config.bindings_for(variant)?;
    let gateway = config.gateway(mode)?;
    let outcome = run_conversation(&task, &bindings, &policy, &config.templates, &gateway)
        .map_err(CliError::from)?;

    let dir = run_dir(common, &config.digest)?;
    let transcript_path = dir.join("transcript.txt");
    write_output(&transcript_path, &export_transcript(&task, &policy, &outcome))?;
    println!("{}", outcome.verdict.as_str());
    println!("transcript: {}", transcript_path.display());
    Ok(())
}

fn cmd_bench(
    common: &CommonArgs,
    dataset: &str,
    variant: Option<String>,
    limit: Option<usize>,
) -> Result<(), CliError> {
    let config = CliConfig::load(common.config_path()?)?;
    let mode = resolve_mode(common, &config)?;
    let name = DatasetName::parse(dataset)
        .ok_or_else(|| CliError::Config(format!("unknown dataset name {dataset:?}")))?;
    let spec = DatasetSpec::builtin(name);
    let variant = match variant.as_deref() {
        Some(v) => parse_variant(v)?,
        None => config
            .default_variant
            .ok_or_else(|| CliError::Config("no variant given and no default_variant".into()))?,
    };
    let mut run = RunConfig::new(spec, config.dataset_path(name)?, variant);
    run.bindings = config.bindings_for(variant)?;
    run.retrieval = if spec.setting == Setting::Open {
        config.retrieval.clone()
    } else {
        None
    };
    run.replay_dir = config.replay_dir.clone();
    run.parallelism = config.parallelism;
    run.limit = limit;

    let gateway = config.gateway(mode)?;
    let embedder = config.embedder(mode)?;
    let report = run_benchmark(
        &run,
        &config.templates,
        &BaselinePrompts::builtin(),
        &gateway,
        embedder.as_deref(),
    )
    .map_err(CliError::from)?;

    let dir = run_dir(common, &config.digest)?;
    write_output(&dir.join("report.json"), &report.to_json())?;
    write_output(&dir.join("report.csv"), &report.to_csv())?;
    write_output(&dir.join("report.txt"), &report.render_text())?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    match report.metric_value {
        Some(v) => println!("{}: {v}", report.metric_name),
        None => println!("{}: n/a", report.metric_name),
    }
    println!("evaluated: {} failed: {}", report.evaluated, report.failed);
    println!("report: {}", dir.join("report.json").display());
    if report.evaluated == 0 {
        if report.failed > 0 {
            return Err(CliError::Gateway(
                "no claim produced a usable verdict".into(),
            ));
        }
        return Err(CliError::Dataset("no claim was evaluated".into()));
    }
    Ok(())
}

fn cmd_retrieval_eval(
    common: &CommonArgs,
    dataset: &str,
    ks: Option<String>,
) -> Result<(), CliError> {
    let config = CliConfig::load(common.config_path()?)?;
    let mode = resolve_mode(common, &config)?;
    let name = DatasetName::parse(dataset)
        .ok_or_else(|| CliError::Config(format!("unknown dataset name {dataset:?}")))?;
    let spec = DatasetSpec::builtin(name);
    let ks: Vec<usize> = match ks {
        Some(raw) => raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("bad depth {s:?} in --ks")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![3, 5, 10],
    };
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::Config("--ks needs positive depths".into()));
    }
    let loaded = load_dataset(&spec, config.dataset_path(name)?).map_err(CliError::from)?;
    for warning in &loaded.warnings {
        eprintln!("warning: {warning}");
    }
    let retrieval = config
        .retrieval
        .clone()
        .ok_or_else(|| CliError::Config("retrieval-eval needs a [retrieval] config".into()))?;
    let embedder = config.embedder(mode)?;
    let curve = evaluate_recall(&loaded.records, &retrieval, embedder.as_deref(), &ks)
        .map_err(CliError::from)?;

    let dir = run_dir(common, &config.digest)?;
    let mut doc = String::from("# Retrieval recall\n\n");
    doc.push_str(&format!("dataset: {}\n", name.token()));
    for (k, recall) in &curve {
        doc.push_str(&format!("recall@{k}: {recall}\n"));
        println!("recall@{k}: {recall}");
    }
    write_output(&dir.join("recall.txt"), &doc)?;
    println!("report: {}", dir.join("recall.txt").display());
    Ok(())
}

fn cmd_build_od(
    common: &CommonArgs,
    dataset: Option<String>,
    k: Option<usize>,
) -> Result<(), CliError> {
    let config = CliConfig::load(common.config_path()?)?;
    let mode = resolve_mode(common, &config)?;
    let source = match dataset.as_deref() {
        None => DatasetName::SciTab,
        Some(s) => DatasetName::parse(s)
            .ok_or_else(|| CliError::Config(format!("unknown dataset name {s:?}")))?,
    };
    let spec = DatasetSpec::builtin(source);
    let k = k.unwrap_or(2);
    if k == 0 {
        return Err(CliError::Config("--k must be at least 1".into()));
    }
    let loaded = load_dataset(&spec, config.dataset_path(source)?).map_err(CliError::from)?;
    for warning in &loaded.warnings {
        eprintln!("warning: {warning}");
    }
    let retrieval = config.retrieval.clone().unwrap_or_default();
    let embedder = config.embedder(mode)?;
    let build = build_scitab_od(&loaded.records, &retrieval, embedder.as_deref(), k)
        .map_err(CliError::from)?;

    let dir = run_dir(common, &config.digest)?;
    let records_path = dir.join("open_domain.jsonl");
    write_records(&records_path, &build.records).map_err(CliError::from)?;
    build
        .corpus
        .write_manifest(dir.join("corpus.jsonl"))
        .map_err(CliError::from)?;
    let recall = build.recall().map_err(CliError::from)?;
    println!("claims: {}", build.records.len());
    println!("corpus tables: {}", build.corpus.len());
    println!("recall@{k}: {recall}");
    println!("records: {}", records_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses argv and runs; returns the process exit code.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successes, not config errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(2);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.describe());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Dispatches one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match cli.command {
        Command::Verify {
            claim,
            evidence,
            variant,
            scheme,
        } => cmd_verify(common, claim, &evidence, variant, scheme),
        Command::Bench {
            dataset,
            variant,
            limit,
        } => cmd_bench(common, &dataset, variant, limit),
        Command::RetrievalEval { dataset, ks } => cmd_retrieval_eval(common, &dataset, ks),
        Command::BuildOd { dataset, k } => cmd_build_od(common, dataset, k),
    }
}
