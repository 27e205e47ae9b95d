//! Parses a verification plan, executes it against a sustainability-report
//! water table, and prints every intermediate value with the exact cells
//! it was computed from.
//!
//! Run with: cargo run --example plan_walkthrough

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use num::ToPrimitive;
use veritab::evidence::{load_record, LabelScheme, RecordFormat};
use veritab::plan::{execute_plan, parse_plan, Value};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn show(value: &Value) -> String {
    match value {
        Value::Series(xs) => {
            let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            format!("[{}]", parts.join(", "))
        }
        Value::Scalar(x) if x.is_integer() => x.to_string(),
        Value::Scalar(x) => {
            let approx = x.to_f64().unwrap_or(f64::NAN);
            format!("{x} (~{approx:.12})")
        }
        Value::Bool(b) => b.to_string(),
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let file = fs::read_to_string(fixture("table1.jsonl"))?;
    let line = file.lines().next().expect("fixture has one record");
    let record = load_record(
        line.as_bytes(),
        RecordFormat::Native {
            scheme: LabelScheme::ThreeWay,
        },
    )?;
    println!("claim: {}\n", record.claim.text);

    let text = fs::read_to_string(fixture("plans/worked_example.plan"))?;
    println!("plan:\n{text}");

    let program = parse_plan(&text)?;
    let trace = execute_plan(&program, &record.evidence)?;
    for step in &trace.steps {
        println!("{} = {}", step.name, show(&step.output));
        for cell in &step.provenance {
            let section = cell.section.as_deref().unwrap_or("-");
            println!(
                "    table {} | {} | {} | {} -> {:?}",
                cell.table, section, cell.row_label, cell.column, cell.text
            );
        }
    }

    match trace.verdict {
        Some(v) => println!("\nverdict: {}", v.as_str()),
        None => println!("\nno verdict step reached"),
    }
    if let Some(note) = &trace.note {
        println!("note: {note}");
    }
    Ok(())
}
