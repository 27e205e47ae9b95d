//! Claim verification over tabular evidence.
//!
//! A claim plus its evidence (tables and/or paragraphs) is driven through a
//! constrained group chat of three model-backed agents: a Planner writes a
//! verification strategy, an Executor carries it out and proposes a verdict,
//! and a Verifier audits the result. Revision edges let the Executor send a
//! plan back to the Planner and the Verifier send a correction request back
//! to the Executor; a hard round cap guarantees termination.
//!
//! The crate is organized around that loop:
//!
//! - [`evidence`]: claims, tables, labels, and the HTML form tables take
//!   when shown to agents.
//! - [`gateway`]: chat-completion access with retries, rate limiting, and
//!   record/replay backends so every run can be reproduced offline.
//! - [`agents`]: the four agent system-message templates and parsers for
//!   each agent's structured output.
//! - [`orchestrator`]: the speaker-selection state machine, transcripts,
//!   and conversation driver.
//! - [`plan`]: a small structured plan language whose interpreter grounds
//!   arithmetic against table cells with full provenance.
//! - [`retrieval`]: BM25 and embedding-based evidence retrieval with
//!   recall evaluation for open-domain tasks.
//! - [`bench`]: dataset loading, classification metrics, and the
//!   benchmark runner that produces deterministic evaluation reports.
//! - [`cli`]: the command-line entry points used by the `veritab` binary.
//!
//! See the crate `examples/` directory for a runnable tour: grounded plan
//! execution, scripted conversations, revision loops, retrieval, metrics,
//! and record/replay benchmarking.

pub mod agents;
pub mod bench;
pub mod cli;
pub mod evidence;
pub mod gateway;
pub mod orchestrator;
pub mod plan;
pub mod retrieval;

pub use evidence::{Claim, EvidenceBundle, LabelScheme, Table, Verdict};
pub use orchestrator::{ConversationPolicy, VerificationOutcome, VerificationTask};
