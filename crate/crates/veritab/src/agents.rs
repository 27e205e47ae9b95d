//! Agent definitions: system-message templates and output parsers.
//!
//! Four roles take part in a conversation. The User opens it with the claim
//! and evidence, the Planner answers with an `<explanation>` and a `<plan>`,
//! the Executor follows the plan and ends with a verdict line (or "revise"
//! to bounce the plan back), and the Verifier audits the Executor and either
//! repeats the verdict or asks for a revision.
//!
//! Templates ship as plain-text assets, one per (role, setting); closed
//! templates are written for the three-way scheme and open templates for the
//! two-way scheme they were published with. Rendering under a two-way scheme
//! strips every "not enough info" clause from a three-way text. Parsing is
//! deliberately forgiving about prose but strict about the outcome: the last
//! non-empty line decides, and "revise" outranks any label.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::evidence::{LabelScheme, Setting, Verdict};
use crate::gateway::{
    ChatMessage, ChatRequest, Gateway, GatewayError, GenerationParams,
};

/// The four conversation roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentRole {
    User,
    Planner,
    Executor,
    Verifier,
}

impl AgentRole {
    pub fn name(&self) -> &'static str {
        match self {
            AgentRole::User => "User",
            AgentRole::Planner => "Planner",
            AgentRole::Executor => "Executor",
            AgentRole::Verifier => "Verifier",
        }
    }

    pub const ALL: [AgentRole; 4] = [
        AgentRole::User,
        AgentRole::Planner,
        AgentRole::Executor,
        AgentRole::Verifier,
    ];
}

impl std::fmt::Display for AgentRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Binds a role to an endpoint and generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBinding {
    pub role: AgentRole,
    pub endpoint: String,
    pub params: GenerationParams,
}

impl AgentBinding {
    pub fn new(role: AgentRole, endpoint: impl Into<String>) -> Self {
        AgentBinding {
            role,
            endpoint: endpoint.into(),
            params: GenerationParams::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed agent output: {0}")]
    MalformedOutput(String),
    #[error("no verdict on the final line: {0:?}")]
    NoVerdict(String),
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("missing template file {0}")]
    MissingFile(String),
    #[error("cannot read template {path}: {cause}")]
    Unreadable { path: String, cause: String },
}

// ---------------------------------------------------------------------------
// Templates

const USER_CLOSED: &str = include_str!("../assets/templates/user_closed.txt");
const PLANNER_CLOSED: &str = include_str!("../assets/templates/planner_closed.txt");
const EXECUTOR_CLOSED: &str = include_str!("../assets/templates/executor_closed.txt");
const VERIFIER_CLOSED: &str = include_str!("../assets/templates/verifier_closed.txt");
const USER_OPEN: &str = include_str!("../assets/templates/user_open.txt");
const PLANNER_OPEN: &str = include_str!("../assets/templates/planner_open.txt");
const EXECUTOR_OPEN: &str = include_str!("../assets/templates/executor_open.txt");
const VERIFIER_OPEN: &str = include_str!("../assets/templates/verifier_open.txt");

fn template_basename(role: AgentRole, setting: Setting) -> String {
    let setting = match setting {
        Setting::Closed => "closed",
        Setting::Open => "open",
    };
    format!("{}_{}.txt", role.name().to_lowercase(), setting)
}

/// The eight (role, setting) system messages, overridable from a directory.
pub struct TemplateSet {
    texts: HashMap<(AgentRole, Setting), String>,
}

impl TemplateSet {
    /// The embedded canonical templates.
    pub fn builtin() -> Self {
        let mut texts = HashMap::new();
        let pairs = [
            (AgentRole::User, Setting::Closed, USER_CLOSED),
            (AgentRole::Planner, Setting::Closed, PLANNER_CLOSED),
            (AgentRole::Executor, Setting::Closed, EXECUTOR_CLOSED),
            (AgentRole::Verifier, Setting::Closed, VERIFIER_CLOSED),
            (AgentRole::User, Setting::Open, USER_OPEN),
            (AgentRole::Planner, Setting::Open, PLANNER_OPEN),
            (AgentRole::Executor, Setting::Open, EXECUTOR_OPEN),
            (AgentRole::Verifier, Setting::Open, VERIFIER_OPEN),
        ];
        for (role, setting, text) in pairs {
            texts.insert((role, setting), text.trim_end().to_string());
        }
        TemplateSet { texts }
    }

    /// Loads all eight templates from `{role}_{setting}.txt` files.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let dir = dir.as_ref();
        let mut texts = HashMap::new();
        for role in AgentRole::ALL {
            for setting in [Setting::Closed, Setting::Open] {
                let path = dir.join(template_basename(role, setting));
                if !path.exists() {
                    return Err(TemplateError::MissingFile(path.display().to_string()));
                }
                let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Unreadable {
                    path: path.display().to_string(),
                    cause: e.to_string(),
                })?;
                texts.insert((role, setting), text.trim_end().to_string());
            }
        }
        Ok(TemplateSet { texts })
    }

    /// Renders the system message for a role under a scheme and setting.
    pub fn render(&self, role: AgentRole, scheme: LabelScheme, setting: Setting) -> String {
        let text = self
            .texts
            .get(&(role, setting))
            .expect("all eight templates present by construction");
        match scheme {
            LabelScheme::ThreeWay => text.clone(),
            LabelScheme::TwoWay => strip_not_enough_info(text),
        }
    }
}

/// Renders from the embedded templates.
pub fn render_system_message(role: AgentRole, scheme: LabelScheme, setting: Setting) -> String {
    TemplateSet::builtin().render(role, scheme, setting)
}

/// Rewrites a three-way template into its two-way form: the "not enough
/// info" verdict bullet is dropped and every remaining label enumeration
/// loses its third member.
pub fn strip_not_enough_info(text: &str) -> String {
    let kept: Vec<&str> = text
        .lines()
        .filter(|line| !line.trim_start().starts_with("- not enough info"))
        .collect();
    kept.join("\n")
        .replace(
            "supported, refuted, or unverifiable (\"not enough info\")",
            "supported or refuted",
        )
        .replace("support/refute/not enough info", "support/refute")
        .replace(
            "\"support\", \"refute\", or \"not enough info\"",
            "\"support\" or \"refute\"",
        )
}

// ---------------------------------------------------------------------------
// Parsers

/// A Planner reply: reasoning plus the plan handed to the Executor.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerOutput {
    pub explanation: String,
    pub plan: String,
}

/// What an Executor or Verifier turn concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Final(Verdict),
    Revise,
}

/// An Executor or Verifier reply.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentVerdict {
    pub explanation: String,
    pub outcome: Outcome,
}

fn tag_block(text: &str, tag: &str) -> Result<Option<String>, ParseError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let Some(start) = text.find(&open) else {
        return Ok(None);
    };
    let after = start + open.len();
    let Some(end_rel) = text[after..].find(&close) else {
        return Err(ParseError::MalformedOutput(format!(
            "<{tag}> block is never closed"
        )));
    };
    Ok(Some(text[after..after + end_rel].trim().to_string()))
}

/// Extracts the first `<explanation>` and `<plan>` blocks, tolerating any
/// surrounding prose.
pub fn parse_planner(text: &str) -> Result<PlannerOutput, ParseError> {
    let explanation = tag_block(text, "explanation")?
        .ok_or_else(|| ParseError::MalformedOutput("missing <explanation> block".into()))?;
    let plan = tag_block(text, "plan")?
        .ok_or_else(|| ParseError::MalformedOutput("missing <plan> block".into()))?;
    if explanation.is_empty() {
        return Err(ParseError::MalformedOutput("empty <explanation> block".into()));
    }
    if plan.is_empty() {
        return Err(ParseError::MalformedOutput("empty <plan> block".into()));
    }
    Ok(PlannerOutput { explanation, plan })
}

/// Lowercases and maps punctuation to spaces so label matching ignores
/// casing and decoration.
fn normalize_line(line: &str) -> String {
    let mapped: String = line
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                ' '
            }
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn label_candidates(scheme: LabelScheme) -> Vec<(&'static str, Outcome)> {
    // "not enough info" first: longest-match logic needs it ahead of the
    // shorter labels it could otherwise collide with.
    let mut out: Vec<(&'static str, Outcome)> = Vec::new();
    if scheme.contains(Verdict::NotEnoughInfo) {
        out.push(("not enough info", Outcome::Final(Verdict::NotEnoughInfo)));
    }
    out.push(("support", Outcome::Final(Verdict::Support)));
    out.push(("refute", Outcome::Final(Verdict::Refute)));
    out.push(("revise", Outcome::Revise));
    out
}

/// Decides the outcome of an Executor or Verifier reply.
///
/// The LAST non-empty line is matched case- and punctuation-insensitively:
/// an exact "revise" wins, then an exact scheme label, then the longest
/// label-or-revise substring (rightmost occurrence on equal length).
pub fn parse_agent_verdict(text: &str, scheme: LabelScheme) -> Result<AgentVerdict, ParseError> {
    let explanation = tag_block(text, "explanation")?.unwrap_or_default();
    let last_line = text
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let norm = normalize_line(last_line);
    if norm == "revise" {
        return Ok(AgentVerdict {
            explanation,
            outcome: Outcome::Revise,
        });
    }
    for verdict in scheme.labels() {
        if norm == normalize_line(verdict.as_str()) {
            return Ok(AgentVerdict {
                explanation,
                outcome: Outcome::Final(*verdict),
            });
        }
    }
    let mut best: Option<(usize, usize, Outcome)> = None;
    for (needle, outcome) in label_candidates(scheme) {
        if let Some(pos) = norm.rfind(needle) {
            let key = (needle.len(), pos);
            if best.is_none_or(|(len, at, _)| key > (len, at)) {
                best = Some((needle.len(), pos, outcome));
            }
        }
    }
    match best {
        Some((_, _, outcome)) => Ok(AgentVerdict {
            explanation,
            outcome,
        }),
        None => Err(ParseError::NoVerdict(last_line.to_string())),
    }
}

/// The re-ask message sent when a reply fails to parse.
pub fn format_reminder(role: AgentRole, scheme: LabelScheme) -> String {
    let labels = match scheme {
        LabelScheme::ThreeWay => "support/refute/not enough info",
        LabelScheme::TwoWay => "support/refute",
    };
    match role {
        AgentRole::Planner => "Your previous reply did not follow the Response Format. Reply again with exactly one <explanation>...</explanation> block followed by one <plan>...</plan> block.".to_string(),
        _ => format!(
            "Your previous reply did not follow the Response Format. Reply again with an <explanation>...</explanation> block, then a single final line containing only {labels} OR \"revise\"."
        ),
    }
}

// ---------------------------------------------------------------------------
// Verdict extraction for single-call baselines

/// Turns a free-form model reply into a final verdict. Used by the
/// single-call baseline variants, where "revise" has no meaning.
pub trait VerdictExtractor {
    fn extract(&self, text: &str, scheme: LabelScheme) -> Result<Verdict, ParseError>;
}

/// The default extractor: the same last-line rule the agents use.
pub struct RuleBasedExtractor;

impl VerdictExtractor for RuleBasedExtractor {
    fn extract(&self, text: &str, scheme: LabelScheme) -> Result<Verdict, ParseError> {
        match parse_agent_verdict(text, scheme)?.outcome {
            Outcome::Final(v) => Ok(v),
            Outcome::Revise => Err(ParseError::NoVerdict(
                "reply asked for revision instead of a verdict".into(),
            )),
        }
    }
}

/// Extractor that asks a model to name the verdict, then rule-parses the
/// (much shorter) reply. Hook for runs whose base model buries the answer.
pub struct LlmExtractor<'g> {
    pub gateway: &'g Gateway,
    pub endpoint: String,
    pub params: GenerationParams,
}

impl LlmExtractor<'_> {
    fn ask(&self, text: &str, scheme: LabelScheme) -> Result<String, GatewayError> {
        let labels = match scheme {
            LabelScheme::ThreeWay => "support, refute, or not enough info",
            LabelScheme::TwoWay => "support or refute",
        };
        let prompt = format!(
            "The following is a model's answer to a claim-verification task.\n\
             Answer:\n{text}\n\nWhich final verdict does it reach? Reply with \
             a single line containing exactly one of: {labels}."
        );
        let response = self.gateway.complete(&ChatRequest {
            endpoint: self.endpoint.clone(),
            messages: vec![ChatMessage::user(prompt)],
            params: self.params.clone(),
        })?;
        Ok(response.content)
    }
}

impl VerdictExtractor for LlmExtractor<'_> {
    fn extract(&self, text: &str, scheme: LabelScheme) -> Result<Verdict, ParseError> {
        let reply = self
            .ask(text, scheme)
            .map_err(|e| ParseError::NoVerdict(format!("extractor call failed: {e}")))?;
        RuleBasedExtractor.extract(&reply, scheme)
    }
}
