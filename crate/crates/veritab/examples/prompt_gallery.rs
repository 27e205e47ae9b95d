//! Prints the agent system messages: the size of all eight role and
//! setting combinations, one template in full, and what changes when the
//! three-way label scheme is narrowed to two labels.
//!
//! Run with: cargo run --example prompt_gallery

use veritab::agents::{render_system_message, AgentRole};
use veritab::evidence::{LabelScheme, Setting};

fn setting_name(setting: Setting) -> &'static str {
    match setting {
        Setting::Closed => "closed",
        Setting::Open => "open",
    }
}

fn main() {
    println!("template sizes (three-way):");
    for setting in [Setting::Closed, Setting::Open] {
        for role in AgentRole::ALL {
            let text = render_system_message(role, LabelScheme::ThreeWay, setting);
            println!(
                "  {:<8} {:<6} {:>4} lines {:>5} chars",
                role.name(),
                setting_name(setting),
                text.lines().count(),
                text.chars().count()
            );
        }
    }

    let three = render_system_message(AgentRole::Verifier, LabelScheme::ThreeWay, Setting::Closed);
    println!("\n--- Verifier, closed setting, three-way ---\n{three}");

    // The two-way form drops the "not enough info" bullet and shortens
    // every label enumeration; nothing else moves.
    let two = render_system_message(AgentRole::Verifier, LabelScheme::TwoWay, Setting::Closed);
    assert!(!two.contains("not enough info"));
    println!("\n--- Verifier, closed setting, two-way ---\n{two}");

    let dropped = three.lines().count() - two.lines().count();
    println!("\ntwo-way rewrite removed {dropped} line(s) and every third label mention");
}
