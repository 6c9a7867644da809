//! Confusion matrix and per-class F1 for a small hand-labelled batch.

use xlod::corpus::Label::{NotOffensive as Not, Offensive as Off};
use xlod::metrics::{macro_f1, reports_to_csv};

fn main() -> xlod::Result<()> {
    let gold = [Off, Off, Not, Off, Not, Not, Not, Not, Not, Not];
    let predicted = [Off, Off, Off, Not, Not, Not, Not, Not, Not, Not];
    let report = macro_f1(&gold, &predicted)?;
    println!("{:?}", report.confusion);
    println!(
        "F1 OFF {:.4}  F1 NOT {:.4}  macro {:.4}",
        report.f1_offensive, report.f1_not_offensive, report.macro_f1
    );

    let all_not = [Not; 10];
    let degenerate = macro_f1(&gold, &all_not)?;
    print!("{}", reports_to_csv(&[("reference".into(), report), ("always NOT".into(), degenerate)])?);
    Ok(())
}
