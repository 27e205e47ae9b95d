//! Shows the two revision edges of the conversation state machine: a
//! Verifier sending work back to the Executor, and a conversation that
//! never converges hitting the round cap and falling back to the
//! scheme's default verdict.
//!
//! Run with: cargo run --example revision_loop

use std::error::Error;

use veritab::agents::{AgentBinding, AgentRole, TemplateSet};
use veritab::evidence::{Cell, Claim, EvidenceBundle, LabelScheme, Row, Setting, Table};
use veritab::gateway::{Gateway, ModelEndpoint, ScriptStep};
use veritab::orchestrator::{
    run_conversation, ConversationPolicy, ConversationVariant, VerificationTask,
};

const PLANNER: &str = "<explanation>Compare the two totals directly.</explanation>\n\
<plan>1. Read both annual totals.\n2. Check the claimed difference.</plan>";

const EXECUTOR_FIRST: &str = "<explanation>Read 815 for 2023 and 642 for 2022; \
the difference is 173, matching the claim.</explanation>\nsupport";

const VERIFIER_REVISE: &str = "<explanation>The 2022 figure was read from the \
wrong row; the Total row says 651, not 642. Redo the subtraction.</explanation>\nrevise";

const EXECUTOR_SECOND: &str = "<explanation>With the Total row values 815 and \
651 the difference is 164, not 173. The claim overstates it.</explanation>\nrefute";

const VERIFIER_FINAL: &str = "<explanation>Both cells now come from the Total \
row and the arithmetic is right.</explanation>\nrefute";

fn task() -> VerificationTask {
    let table = Table::new(
        "Annual shipments (kt)",
        vec!["2023".into(), "2022".into()],
        vec![
            Row {
                label: "Northern mines".into(),
                cells: vec![Cell::new("520"), Cell::new("642")],
            },
            Row {
                label: "Total".into(),
                cells: vec![Cell::new("815"), Cell::new("651")],
            },
        ],
    )
    .expect("columns are unique");
    VerificationTask {
        claim: Claim {
            id: "ship-0001".into(),
            text: "Total shipments grew by 173 kt from 2022 to 2023.".into(),
            gold_label: None,
        },
        evidence: EvidenceBundle {
            tables: vec![table],
            paragraphs: Vec::new(),
        },
        scheme: LabelScheme::ThreeWay,
        setting: Setting::Closed,
    }
}

fn pev() -> (Vec<AgentBinding>, ConversationPolicy) {
    let bindings = vec![
        AgentBinding::new(AgentRole::Planner, "scripted-model"),
        AgentBinding::new(AgentRole::Executor, "scripted-model"),
        AgentBinding::new(AgentRole::Verifier, "scripted-model"),
    ];
    let policy = ConversationPolicy::new(ConversationVariant::PevSame, LabelScheme::ThreeWay);
    (bindings, policy)
}

fn main() -> Result<(), Box<dyn Error>> {
    let templates = TemplateSet::builtin();
    let task = task();
    let (bindings, policy) = pev();

    // One revision: the Verifier catches a wrong cell read, the Executor
    // redoes the arithmetic, and the corrected verdict stands.
    let gateway = Gateway::scripted(
        vec![ModelEndpoint::new("scripted-model")],
        vec![
            ScriptStep::Reply(PLANNER.into()),
            ScriptStep::Reply(EXECUTOR_FIRST.into()),
            ScriptStep::Reply(VERIFIER_REVISE.into()),
            ScriptStep::Reply(EXECUTOR_SECOND.into()),
            ScriptStep::Reply(VERIFIER_FINAL.into()),
        ],
    );
    let outcome = run_conversation(&task, &bindings, &policy, &templates, &gateway)?;
    println!("corrected run:");
    println!("  turns: {:?}", outcome.transcript.roles());
    for event in &outcome.transcript.revision_events {
        println!(
            "  revision at turn {}: {} -> {}",
            event.round,
            event.from.name(),
            event.to.name()
        );
    }
    println!(
        "  verdict: {} (exhausted: {})\n",
        outcome.verdict.as_str(),
        outcome.exhausted
    );

    // A Verifier that never approves: the round cap ends the conversation
    // and the three-way fallback verdict applies.
    let endless: Vec<ScriptStep> = std::iter::once(ScriptStep::Reply(PLANNER.into()))
        .chain(
            [EXECUTOR_FIRST, VERIFIER_REVISE]
                .into_iter()
                .cycle()
                .take(6)
                .map(|r| ScriptStep::Reply(r.into())),
        )
        .collect();
    let gateway = Gateway::scripted(vec![ModelEndpoint::new("scripted-model")], endless);
    let outcome = run_conversation(&task, &bindings, &policy, &templates, &gateway)?;
    println!("non-converging run:");
    println!("  turns: {:?}", outcome.transcript.roles());
    println!(
        "  revisions fired: {}",
        outcome.transcript.revision_events.len()
    );
    println!(
        "  verdict: {} (exhausted: {}, cap: {} rounds)",
        outcome.verdict.as_str(),
        outcome.exhausted,
        policy.max_rounds
    );
    Ok(())
}
