use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CorpusCatalog, LabeledExample, Language};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBalance {
    pub offensive: usize,
    pub not_offensive: usize,
}

impl SplitBalance {
    fn of(examples: &[LabeledExample]) -> Self {
        let offensive = examples.iter().filter(|e| e.label.is_offensive()).count();
        Self {
            offensive,
            not_offensive: examples.len() - offensive,
        }
    }

    pub fn offensive_share(&self) -> f64 {
        let n = self.offensive + self.not_offensive;
        if n == 0 {
            0.0
        } else {
            self.offensive as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub language: Language,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub train_balance: SplitBalance,
    pub dev_balance: SplitBalance,
    pub test_balance: SplitBalance,
}

/// One row per language, in catalog order.
pub fn corpus_summary(catalog: &CorpusCatalog) -> Result<Vec<SummaryRow>> {
    if catalog.is_empty() {
        return Err(Error::arg("cannot summarize an empty catalog"));
    }
    Ok(catalog
        .iter()
        .map(|c| SummaryRow {
            language: c.language,
            train: c.train.len(),
            dev: c.dev.len(),
            test: c.test.len(),
            train_balance: SplitBalance::of(&c.train),
            dev_balance: SplitBalance::of(&c.dev),
            test_balance: SplitBalance::of(&c.test),
        })
        .collect())
}

/// Markdown table of split sizes and offensive share per split.
pub fn summary_markdown(rows: &[SummaryRow]) -> String {
    let mut out = String::from("| Language | Train | Dev | Test | OFF% train | OFF% dev | OFF% test |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.1} | {:.1} | {:.1} |",
            r.language.display_name(),
            r.train,
            r.dev,
            r.test,
            100.0 * r.train_balance.offensive_share(),
            100.0 * r.dev_balance.offensive_share(),
            100.0 * r.test_balance.offensive_share(),
        );
    }
    out
}
