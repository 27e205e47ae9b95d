//! The constrained group chat that drives one verification.
//!
//! Speaker order is fixed: User opens with the claim and evidence, then
//! Planner, Executor, and (except under the PE variant) Verifier take turns.
//! Two revision edges bend the sequence backward: an Executor answering
//! "revise" sends the conversation back to the Planner, and a Verifier
//! answering "revise" sends it back to the Executor. Everything else
//! terminates: an Executor verdict ends a PE run directly, and a Verifier
//! verdict ends the other variants, with the final label taken from the
//! Executor's most recent provisional verdict (the Verifier approves, it
//! does not relabel).
//!
//! A round is a single turn, the User's included, and the round cap (8 by
//! the default policy) guarantees termination even against an adversarial
//! always-revise peer: when the cap would be exceeded the conversation stops
//! with `exhausted = true` and the policy's fallback verdict.
//!
//! Wall clock is the sum of model-call latencies reported by the gateway,
//! so replayed conversations account time identically on every run.

use std::time::Duration;

use thiserror::Error;

use crate::agents::{
    format_reminder, parse_agent_verdict, parse_planner, AgentBinding, AgentRole, Outcome,
    ParseError, TemplateSet,
};
use crate::evidence::{
    render_table_html, Claim, EvidenceBundle, LabelScheme, Setting, Verdict,
};
use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError};

/// Which agents take part and how the loop may end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConversationVariant {
    /// Planner + Executor; the Executor's verdict is final.
    Pe,
    /// Planner + Executor + Verifier, all on one endpoint.
    PevSame,
    /// Planner + Executor on one endpoint, Verifier on another.
    PevIndep,
}

impl ConversationVariant {
    pub fn uses_verifier(&self) -> bool {
        !matches!(self, ConversationVariant::Pe)
    }

    pub fn token(&self) -> &'static str {
        match self {
            ConversationVariant::Pe => "PE",
            ConversationVariant::PevSame => "PEV_same",
            ConversationVariant::PevIndep => "PEV_indep",
        }
    }
}

/// One claim plus everything needed to verify it.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationTask {
    pub claim: Claim,
    pub evidence: EvidenceBundle,
    pub scheme: LabelScheme,
    pub setting: Setting,
}

/// One conversation turn with its parsed outcome (Executor and Verifier
/// turns only; User and Planner turns carry none).
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub role: AgentRole,
    pub text: String,
    pub outcome: Option<Outcome>,
}

/// A revision edge that actually fired: `from` asked `to` to redo work at
/// the 1-based turn index `round`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RevisionEvent {
    pub from: AgentRole,
    pub to: AgentRole,
    pub round: usize,
}

/// Ordered turns plus the revision edges that fired. One round = one turn.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub turns: Vec<Turn>,
    pub revision_events: Vec<RevisionEvent>,
}

impl Transcript {
    pub fn round_count(&self) -> usize {
        self.turns.len()
    }

    pub fn roles(&self) -> Vec<AgentRole> {
        self.turns.iter().map(|t| t.role).collect()
    }
}

/// Loop limits and exhaustion behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationPolicy {
    /// Hard cap on turns; at least 3 (User, Planner, Executor).
    pub max_rounds: usize,
    pub variant: ConversationVariant,
    /// Verdict reported when the cap is hit before a final verdict.
    pub fallback_verdict: Verdict,
}

impl ConversationPolicy {
    /// The default policy: 8 rounds, fallback "not enough info" under the
    /// three-way scheme and "refute" under the two-way scheme.
    pub fn new(variant: ConversationVariant, scheme: LabelScheme) -> Self {
        let fallback_verdict = match scheme {
            LabelScheme::ThreeWay => Verdict::NotEnoughInfo,
            LabelScheme::TwoWay => Verdict::Refute,
        };
        ConversationPolicy {
            max_rounds: 8,
            variant,
            fallback_verdict,
        }
    }
}

/// What a finished conversation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationOutcome {
    pub verdict: Verdict,
    pub transcript: Transcript,
    /// True iff the round cap ended the conversation.
    pub exhausted: bool,
    /// Total model-call latency.
    pub wall_clock: Duration,
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("gateway failure after {} turns: {source}", transcript.round_count())]
    Gateway {
        source: GatewayError,
        transcript: Transcript,
    },
    #[error("{role} output unusable after one re-ask: {cause}")]
    Parse {
        role: AgentRole,
        cause: ParseError,
        transcript: Transcript,
    },
    #[error("illegal conversation state: {0}")]
    IllegalState(String),
    #[error("policy violation: {0}")]
    Policy(String),
    #[error("task has no evidence")]
    EmptyEvidence,
}

/// Who speaks next, or nobody.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextStep {
    Speak(AgentRole),
    Terminate,
}

/// The speaker-selection function: a pure map from the last turn (role and
/// parsed outcome) and the variant to the next step.
pub fn next_speaker(
    transcript: &Transcript,
    policy: &ConversationPolicy,
) -> Result<NextStep, OrchestratorError> {
    let last = transcript
        .turns
        .last()
        .ok_or_else(|| OrchestratorError::IllegalState("empty transcript".into()))?;
    let illegal = |msg: String| Err(OrchestratorError::IllegalState(msg));
    match (last.role, &last.outcome) {
        (AgentRole::User, None) => Ok(NextStep::Speak(AgentRole::Planner)),
        (AgentRole::User, Some(_)) => illegal("User turns carry no outcome".into()),
        (AgentRole::Planner, None) => Ok(NextStep::Speak(AgentRole::Executor)),
        (AgentRole::Planner, Some(_)) => illegal("Planner turns carry no outcome".into()),
        (AgentRole::Executor, Some(Outcome::Final(_))) => {
            if policy.variant.uses_verifier() {
                Ok(NextStep::Speak(AgentRole::Verifier))
            } else {
                Ok(NextStep::Terminate)
            }
        }
        (AgentRole::Executor, Some(Outcome::Revise)) => Ok(NextStep::Speak(AgentRole::Planner)),
        (AgentRole::Executor, None) => illegal("Executor turns must carry an outcome".into()),
        (AgentRole::Verifier, _) if !policy.variant.uses_verifier() => {
            illegal(format!("Verifier cannot speak under {}", policy.variant.token()))
        }
        (AgentRole::Verifier, Some(Outcome::Final(_))) => Ok(NextStep::Terminate),
        (AgentRole::Verifier, Some(Outcome::Revise)) => Ok(NextStep::Speak(AgentRole::Executor)),
        (AgentRole::Verifier, None) => illegal("Verifier turns must carry an outcome".into()),
    }
}

/// Every table in its HTML form and every paragraph, numbered, as one
/// text block. Shared by the conversation opener and the single-prompt
/// baselines so agents and baselines see identical evidence.
pub fn render_evidence(evidence: &EvidenceBundle) -> String {
    let mut blocks = Vec::new();
    for (i, table) in evidence.tables.iter().enumerate() {
        blocks.push(format!("Table {}:\n{}", i + 1, render_table_html(table)));
    }
    for (i, paragraph) in evidence.paragraphs.iter().enumerate() {
        blocks.push(format!("Paragraph {}:\n{}", i + 1, paragraph));
    }
    blocks.join("\n\n")
}

/// The User's opening message: claim first, then the evidence blocks.
pub fn compose_user_message(task: &VerificationTask) -> String {
    format!(
        "Claim: {}\n\nEvidence:\n\n{}\n",
        task.claim.text,
        render_evidence(&task.evidence)
    )
}

/// Every prior turn as a speaker-attributed user message. All agents see
/// the same shared history; their own system message rides separately.
pub fn visible_history(transcript: &Transcript, _role: AgentRole) -> Vec<ChatMessage> {
    transcript
        .turns
        .iter()
        .map(|turn| ChatMessage::user(format!("{}: {}", turn.role.name(), turn.text)))
        .collect()
}

fn binding_for<'b>(
    bindings: &'b [AgentBinding],
    role: AgentRole,
) -> Result<&'b AgentBinding, OrchestratorError> {
    bindings
        .iter()
        .find(|b| b.role == role)
        .ok_or_else(|| OrchestratorError::Policy(format!("no binding for role {role}")))
}

fn validate(
    task: &VerificationTask,
    bindings: &[AgentBinding],
    policy: &ConversationPolicy,
) -> Result<(), OrchestratorError> {
    if task.evidence.is_empty() {
        return Err(OrchestratorError::EmptyEvidence);
    }
    if policy.max_rounds < 3 {
        return Err(OrchestratorError::Policy(
            "max_rounds must be at least 3".into(),
        ));
    }
    if !policy.fallback_verdict_in_scheme(task.scheme) {
        return Err(OrchestratorError::Policy(format!(
            "fallback verdict {:?} is outside the task's label scheme",
            policy.fallback_verdict
        )));
    }
    let executor = binding_for(bindings, AgentRole::Executor)?;
    binding_for(bindings, AgentRole::Planner)?;
    let verifier = bindings.iter().find(|b| b.role == AgentRole::Verifier);
    match policy.variant {
        ConversationVariant::Pe => {
            if verifier.is_some() {
                return Err(OrchestratorError::Policy(
                    "the PE variant runs without a Verifier binding".into(),
                ));
            }
        }
        ConversationVariant::PevSame => {
            let v = verifier.ok_or_else(|| {
                OrchestratorError::Policy("no binding for role Verifier".into())
            })?;
            if v.endpoint != executor.endpoint {
                return Err(OrchestratorError::Policy(
                    "PEV_same requires the Verifier on the Executor's endpoint".into(),
                ));
            }
        }
        ConversationVariant::PevIndep => {
            let v = verifier.ok_or_else(|| {
                OrchestratorError::Policy("no binding for role Verifier".into())
            })?;
            if v.endpoint == executor.endpoint {
                return Err(OrchestratorError::Policy(
                    "PEV_indep requires a Verifier endpoint distinct from the Executor's".into(),
                ));
            }
        }
    }
    Ok(())
}

impl ConversationPolicy {
    fn fallback_verdict_in_scheme(&self, scheme: LabelScheme) -> bool {
        scheme.contains(self.fallback_verdict)
    }
}

/// Drives one conversation to termination or round exhaustion.
pub fn run_conversation(
    task: &VerificationTask,
    bindings: &[AgentBinding],
    policy: &ConversationPolicy,
    templates: &TemplateSet,
    gateway: &Gateway,
) -> Result<VerificationOutcome, OrchestratorError> {
    validate(task, bindings, policy)?;
    let mut transcript = Transcript::default();
    let mut wall_clock = Duration::ZERO;
    transcript.turns.push(Turn {
        role: AgentRole::User,
        text: compose_user_message(task),
        outcome: None,
    });
    loop {
        match next_speaker(&transcript, policy)? {
            NextStep::Terminate => {
                let verdict = final_verdict(&transcript).ok_or_else(|| {
                    OrchestratorError::IllegalState(
                        "terminated without an executor verdict".into(),
                    )
                })?;
                return Ok(VerificationOutcome {
                    verdict,
                    transcript,
                    exhausted: false,
                    wall_clock,
                });
            }
            NextStep::Speak(role) => {
                if transcript.round_count() >= policy.max_rounds {
                    return Ok(VerificationOutcome {
                        verdict: policy.fallback_verdict,
                        transcript,
                        exhausted: true,
                        wall_clock,
                    });
                }
                let turn = take_turn(task, bindings, templates, gateway, &transcript, role)
                    .map_err(|e| e.attach(&transcript))?;
                wall_clock += turn.latency;
                let round = transcript.round_count() + 1;
                if turn.outcome == Some(Outcome::Revise) {
                    let to = match role {
                        AgentRole::Executor => AgentRole::Planner,
                        AgentRole::Verifier => AgentRole::Executor,
                        _ => unreachable!("only Executor and Verifier revise"),
                    };
                    transcript
                        .revision_events
                        .push(RevisionEvent { from: role, to, round });
                }
                transcript.turns.push(Turn {
                    role,
                    text: turn.text,
                    outcome: turn.outcome,
                });
            }
        }
    }
}

/// The verdict a terminated transcript stands for: the Executor's most
/// recent provisional verdict (a Verifier approval repeats it, a PE run
/// ends on it directly).
fn final_verdict(transcript: &Transcript) -> Option<Verdict> {
    transcript
        .turns
        .iter()
        .rev()
        .filter(|t| t.role == AgentRole::Executor)
        .find_map(|t| match t.outcome {
            Some(Outcome::Final(v)) => Some(v),
            _ => None,
        })
}

struct TurnResult {
    text: String,
    outcome: Option<Outcome>,
    latency: Duration,
}

/// A turn-level failure, before the surrounding transcript is attached.
enum TurnError {
    Gateway(GatewayError),
    Parse(AgentRole, ParseError),
}

impl TurnError {
    fn attach(self, transcript: &Transcript) -> OrchestratorError {
        match self {
            TurnError::Gateway(source) => OrchestratorError::Gateway {
                source,
                transcript: transcript.clone(),
            },
            TurnError::Parse(role, cause) => OrchestratorError::Parse {
                role,
                cause,
                transcript: transcript.clone(),
            },
        }
    }
}

fn take_turn(
    task: &VerificationTask,
    bindings: &[AgentBinding],
    templates: &TemplateSet,
    gateway: &Gateway,
    transcript: &Transcript,
    role: AgentRole,
) -> Result<TurnResult, TurnError> {
    let binding = binding_for(bindings, role).map_err(|_| {
        TurnError::Parse(
            role,
            ParseError::MalformedOutput("role has no binding".into()),
        )
    })?;
    let system = templates.render(role, task.scheme, task.setting);
    let mut messages = vec![ChatMessage::system(system)];
    messages.extend(visible_history(transcript, role));
    let mut latency = Duration::ZERO;
    let mut request = ChatRequest {
        endpoint: binding.endpoint.clone(),
        messages,
        params: binding.params.clone(),
    };
    let mut reply = gateway.complete(&request).map_err(TurnError::Gateway)?;
    latency += reply.latency;
    for attempt in 0..2 {
        let parsed = parse_turn(role, &reply.content, task.scheme);
        match parsed {
            Ok(outcome) => {
                return Ok(TurnResult {
                    text: reply.content,
                    outcome,
                    latency,
                })
            }
            Err(cause) => {
                if attempt == 1 {
                    return Err(TurnError::Parse(role, cause));
                }
                // One re-ask: show the agent its reply and remind it of the
                // format.
                request
                    .messages
                    .push(ChatMessage::assistant(reply.content.clone()));
                request
                    .messages
                    .push(ChatMessage::user(format_reminder(role, task.scheme)));
                reply = gateway.complete(&request).map_err(TurnError::Gateway)?;
                latency += reply.latency;
            }
        }
    }
    unreachable!("loop returns on parse success or second failure")
}

fn parse_turn(
    role: AgentRole,
    text: &str,
    scheme: LabelScheme,
) -> Result<Option<Outcome>, ParseError> {
    match role {
        AgentRole::Planner => parse_planner(text).map(|_| None),
        AgentRole::Executor | AgentRole::Verifier => {
            parse_agent_verdict(text, scheme).map(|v| Some(v.outcome))
        }
        AgentRole::User => Ok(None),
    }
}

/// Renders the self-describing transcript document exported per claim.
///
/// No timestamps appear anywhere, so replayed runs export identical bytes.
pub fn export_transcript(
    task: &VerificationTask,
    policy: &ConversationPolicy,
    outcome: &VerificationOutcome,
) -> String {
    let mut out = String::new();
    out.push_str("# Verification transcript\n\n");
    out.push_str(&format!("claim_id: {}\n", task.claim.id));
    out.push_str(&format!("claim: {}\n", task.claim.text));
    let scheme = match task.scheme {
        LabelScheme::TwoWay => "2-way",
        LabelScheme::ThreeWay => "3-way",
    };
    let setting = match task.setting {
        Setting::Closed => "closed",
        Setting::Open => "open",
    };
    out.push_str(&format!("scheme: {scheme}\n"));
    out.push_str(&format!("setting: {setting}\n"));
    out.push_str(&format!("variant: {}\n", policy.variant.token()));
    out.push_str(&format!("verdict: {}\n", outcome.verdict.token()));
    out.push_str(&format!("exhausted: {}\n", outcome.exhausted));
    out.push_str(&format!("rounds: {}\n", outcome.transcript.round_count()));
    out.push_str(&format!(
        "wall_clock_ms: {}\n",
        outcome.wall_clock.as_millis()
    ));
    let events: Vec<String> = outcome
        .transcript
        .revision_events
        .iter()
        .map(|e| format!("{}->{}@{}", e.from.name(), e.to.name(), e.round))
        .collect();
    out.push_str(&format!(
        "revision_events: {}\n",
        if events.is_empty() {
            "none".to_string()
        } else {
            events.join(", ")
        }
    ));
    for (i, turn) in outcome.transcript.turns.iter().enumerate() {
        let outcome_note = match &turn.outcome {
            Some(Outcome::Final(v)) => format!(" [outcome: {}]", v.token()),
            Some(Outcome::Revise) => " [outcome: revise]".to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "\n## Turn {}: {}{}\n\n{}\n",
            i + 1,
            turn.role.name(),
            outcome_note,
            turn.text
        ));
    }
    out
}
