//! Scores predictions against gold labels and shows why macro F1 over a
//! fixed class set differs from micro F1, which for single-label tasks is
//! plain accuracy.
//!
//! Run with: cargo run --example metrics_demo

use std::error::Error;

use veritab::bench::{accuracy, macro_f1, micro_f1};
use veritab::evidence::{LabelScheme, Verdict};

fn main() -> Result<(), Box<dyn Error>> {
    use Verdict::{NotEnoughInfo, Refute, Support};

    let golds = [Support, Support, Refute, NotEnoughInfo, Refute, Support];
    let preds = [Support, Refute, Refute, Support, Refute, Support];
    println!("gold: {:?}", golds.iter().map(Verdict::as_str).collect::<Vec<_>>());
    println!("pred: {:?}", preds.iter().map(Verdict::as_str).collect::<Vec<_>>());

    let classes = LabelScheme::ThreeWay.labels();
    println!("\nmacro F1 (three-way): {:.4}", macro_f1(&preds, &golds, classes)?);
    println!("micro F1:             {:.4}", micro_f1(&preds, &golds)?);
    println!("accuracy:             {:.4}", accuracy(&preds, &golds)?);

    // Macro F1 averages over the declared classes, not the observed ones:
    // a class the system never predicts and the gold never uses still
    // contributes a zero. Here no prediction is ever "not enough info",
    // so its F1 is 0 and the macro average drops even though accuracy
    // ignores it entirely.
    let golds = [Support, Refute, Support, Refute];
    let preds = [Support, Refute, Support, Support];
    println!(
        "\nsame predictions, two class sets (gold never uses the third label):"
    );
    println!(
        "  macro F1 over two classes:   {:.4}",
        macro_f1(&preds, &golds, LabelScheme::TwoWay.labels())?
    );
    println!(
        "  macro F1 over three classes: {:.4}",
        macro_f1(&preds, &golds, LabelScheme::ThreeWay.labels())?
    );
    Ok(())
}
