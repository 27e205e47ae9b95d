//! Runs one Planner, Executor, Verifier conversation end to end with
//! scripted model replies, then prints the transcript and the exported
//! report form.
//!
//! Run with: cargo run --example scripted_conversation

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use veritab::agents::{AgentBinding, AgentRole, TemplateSet};
use veritab::evidence::{load_record, LabelScheme, RecordFormat, Setting};
use veritab::gateway::{Gateway, ModelEndpoint, ScriptStep};
use veritab::orchestrator::{
    export_transcript, run_conversation, ConversationPolicy, ConversationVariant,
    VerificationTask,
};

const PLANNER: &str = "<explanation>The claim asserts a reuse share of all \
operational water use, so the check is a ratio of two multi-year sums.</explanation>\n\
<plan>1. Extract the company-wide reused/recycled water figures for 2017 through 2023.\n\
2. Extract the company-wide operational water use figures for the same years.\n\
3. Sum both series.\n\
4. Divide the reused total by the operational total and convert to a percentage.\n\
5. Compare with the claimed 55.82% at two decimals.</plan>";

const EXECUTOR: &str = "<explanation>Reused/recycled water sums to 1,099,107 \
and operational water use to 1,968,929. The ratio is 0.558226, or 55.82% at \
two decimals, which matches the claim.</explanation>\nsupport";

const VERIFIER: &str = "<explanation>Both sums trace back to the All \
Operations rows and the rounding is half-up at two decimals. The comparison \
holds.</explanation>\nsupport";

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn main() -> Result<(), Box<dyn Error>> {
    let file = fs::read_to_string(fixture("table1.jsonl"))?;
    let record = load_record(
        file.lines().next().expect("fixture has one record").as_bytes(),
        RecordFormat::Native {
            scheme: LabelScheme::ThreeWay,
        },
    )?;

    let task = VerificationTask {
        claim: record.claim,
        evidence: record.evidence,
        scheme: LabelScheme::ThreeWay,
        setting: Setting::Closed,
    };
    // One endpoint serves all three roles (the PEV_same arrangement).
    let bindings = vec![
        AgentBinding::new(AgentRole::Planner, "scripted-model"),
        AgentBinding::new(AgentRole::Executor, "scripted-model"),
        AgentBinding::new(AgentRole::Verifier, "scripted-model"),
    ];
    let gateway = Gateway::scripted(
        vec![ModelEndpoint::new("scripted-model")],
        vec![
            ScriptStep::Reply(PLANNER.into()),
            ScriptStep::Reply(EXECUTOR.into()),
            ScriptStep::Reply(VERIFIER.into()),
        ],
    );
    let policy = ConversationPolicy::new(ConversationVariant::PevSame, task.scheme);
    let templates = TemplateSet::builtin();

    let outcome = run_conversation(&task, &bindings, &policy, &templates, &gateway)?;

    println!("turn order:");
    for (i, turn) in outcome.transcript.turns.iter().enumerate() {
        let head = turn.text.lines().next().unwrap_or("");
        let head: String = head.chars().take(60).collect();
        println!("  {} {:<8} {head}", i + 1, turn.role.name());
    }
    println!(
        "\nverdict: {} in {} rounds (exhausted: {})",
        outcome.verdict.as_str(),
        outcome.transcript.round_count(),
        outcome.exhausted
    );

    println!("\n{}", export_transcript(&task, &policy, &outcome));
    Ok(())
}
