//! Runs the benchmark pipeline over a four-claim fixture dataset with a
//! scripted model and prints the deterministic evaluation report.
//!
//! Run with: cargo run --example benchmark_report

use std::error::Error;
use std::path::{Path, PathBuf};

use veritab::agents::{AgentBinding, AgentRole, TemplateSet};
use veritab::bench::{
    run_benchmark, BaselinePrompts, DatasetName, DatasetSpec, RunConfig, Variant,
};
use veritab::gateway::{Gateway, ModelEndpoint, ScriptStep};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn main() -> Result<(), Box<dyn Error>> {
    // A two-way accuracy benchmark; the fixture is far smaller than the
    // profile's published size, which the report surfaces as a warning.
    let spec = DatasetSpec::builtin(DatasetName::FinDVerTestmini);
    let mut cfg = RunConfig::new(spec, fixture("datasets/native_tiny.jsonl"), Variant::WCot);
    cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "scripted-model")];
    // One worker keeps scripted replies aligned with dataset order.
    cfg.parallelism = 1;

    let answer = |verdict: &str| {
        ScriptStep::Reply(format!(
            "<explanation>Checked the cited cells against the table.</explanation>\n{verdict}"
        ))
    };
    let gateway = Gateway::scripted(
        vec![ModelEndpoint::new("scripted-model")],
        vec![
            answer("support"),
            answer("refute"),
            answer("support"),
            answer("refute"),
        ],
    );

    let report = run_benchmark(
        &cfg,
        &TemplateSet::builtin(),
        &BaselinePrompts::builtin(),
        &gateway,
        None,
    )?;

    println!("{}", report.render_text());
    println!("--- per-claim rows (CSV) ---\n{}", report.to_csv());

    // The aggregate is recomputable from the rows alone.
    let recomputed = report.recompute_metric(&spec)?;
    assert_eq!(recomputed, report.metric_value);
    println!("metric recomputed from rows: {recomputed:?}");
    Ok(())
}
