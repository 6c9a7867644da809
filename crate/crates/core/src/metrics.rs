//! Binary confusion matrix, per-class F1 and macro-F1.
//!
//! The positive class is always OFFENSIVE. A class with no gold and no
//! predicted instances scores F1 = 0, which drags macro-F1 to at most 0.5 on
//! single-class fixtures.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion_matrix(gold: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix> {
    check_lengths(gold, predicted)?;
    let mut m = ConfusionMatrix::default();
    for (&g, &p) in gold.iter().zip(predicted) {
        match (g, p) {
            (Label::Offensive, Label::Offensive) => m.tp += 1,
            (Label::NotOffensive, Label::Offensive) => m.fp += 1,
            (Label::Offensive, Label::NotOffensive) => m.fn_ += 1,
            (Label::NotOffensive, Label::NotOffensive) => m.tn += 1,
        }
    }
    Ok(m)
}

fn check_lengths(gold: &[Label], predicted: &[Label]) -> Result<()> {
    if gold.len() != predicted.len() {
        return Err(Error::arg(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::arg("cannot score an empty prediction set"));
    }
    Ok(())
}

/// F1 of `class`, treating it as the positive class.
pub fn f1_binary_class(m: &ConfusionMatrix, class: Label) -> f64 {
    let (tp, fp, fn_) = match class {
        Label::Offensive => (m.tp, m.fp, m.fn_),
        Label::NotOffensive => (m.tn, m.fn_, m.fp),
    };
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    pub f1_offensive: f64,
    pub f1_not_offensive: f64,
    pub confusion: ConfusionMatrix,
    pub n: usize,
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let f1_offensive = f1_binary_class(&confusion, Label::Offensive);
        let f1_not_offensive = f1_binary_class(&confusion, Label::NotOffensive);
        Self {
            macro_f1: (f1_offensive + f1_not_offensive) / 2.0,
            f1_offensive,
            f1_not_offensive,
            confusion,
            n: confusion.total(),
        }
    }
}

pub fn macro_f1(gold: &[Label], predicted: &[Label]) -> Result<MetricsReport> {
    Ok(MetricsReport::from_confusion(confusion_matrix(gold, predicted)?))
}

/// CSV with one row per named report: name, macro_f1, per-class F1, cells, n.
pub fn reports_to_csv(rows: &[(String, MetricsReport)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "name",
        "macro_f1",
        "f1_offensive",
        "f1_not_offensive",
        "tp",
        "fp",
        "fn",
        "tn",
        "n",
    ])?;
    for (name, r) in rows {
        w.write_record([
            name.clone(),
            format!("{:.6}", r.macro_f1),
            format!("{:.6}", r.f1_offensive),
            format!("{:.6}", r.f1_not_offensive),
            r.confusion.tp.to_string(),
            r.confusion.fp.to_string(),
            r.confusion.fn_.to_string(),
            r.confusion.tn.to_string(),
            r.n.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}
