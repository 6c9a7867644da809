use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use crate::corpus::Language;
use crate::error::{Error, Result};

/// Mean and sample standard deviation over repeated seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl CellStat {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

/// Macro-F1 grid: one row per training setting, one column per test language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<Language>,
    pub cells: Vec<Vec<Option<CellStat>>>,
}

impl ResultsMatrix {
    /// Groups records by row label and test language, averaging seeds. Rows
    /// keep the order in which labels first appear in `records`.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut rows: Vec<String> = Vec::new();
        let mut values: BTreeMap<(usize, Language), Vec<f64>> = BTreeMap::new();
        let mut columns: Vec<Language> = Vec::new();
        for r in records {
            let label = r.row_label();
            let row = rows.iter().position(|x| *x == label).unwrap_or_else(|| {
                rows.push(label);
                rows.len() - 1
            });
            if !columns.contains(&r.test_language) {
                columns.push(r.test_language);
            }
            values
                .entry((row, r.test_language))
                .or_default()
                .push(r.metrics.macro_f1);
        }
        columns.sort();
        let cells = (0..rows.len())
            .map(|i| {
                columns
                    .iter()
                    .map(|&c| values.get(&(i, c)).and_then(|v| CellStat::from_values(v)))
                    .collect()
            })
            .collect();
        Self { rows, columns, cells }
    }

    pub fn get(&self, row: &str, column: Language) -> Option<CellStat> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.columns.iter().position(|&c| c == column)?;
        self.cells[i][j]
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().flatten().all(Option::is_some)
    }

    /// Row index of the best mean in each column (first on ties).
    pub fn column_best(&self) -> Vec<Option<usize>> {
        (0..self.columns.len())
            .map(|j| {
                let mut best: Option<(usize, f64)> = None;
                for (i, row) in self.cells.iter().enumerate() {
                    if let Some(c) = row[j] {
                        if best.is_none_or(|(_, b)| c.mean > b) {
                            best = Some((i, c.mean));
                        }
                    }
                }
                best.map(|(i, _)| i)
            })
            .collect()
    }

    /// `setting,<lang>,...` with full-precision means; empty cells stay empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["setting".to_string()];
        header.extend(self.columns.iter().map(|l| l.display_name()));
        w.write_record(&header)?;
        for (label, row) in self.rows.iter().zip(&self.cells) {
            let mut fields = vec![label.clone()];
            fields.extend(row.iter().map(|c| c.map(|c| format!("{:.6}", c.mean)).unwrap_or_default()));
            w.write_record(&fields)?;
        }
        into_string(w)
    }

    /// Markdown table with the best value of each column in bold.
    pub fn to_markdown(&self) -> String {
        let best = self.column_best();
        let mut out = String::from("| Setting |");
        for c in &self.columns {
            let _ = write!(out, " {} |", c.display_name());
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.columns.len()));
        out.push('\n');
        for (i, (label, row)) in self.rows.iter().zip(&self.cells).enumerate() {
            let _ = write!(out, "| {label} |");
            for (j, cell) in row.iter().enumerate() {
                let text = match cell {
                    None => "-".to_string(),
                    Some(c) if c.n > 1 => format!("{:.3} ± {:.3}", c.mean, c.std),
                    Some(c) => format!("{:.3}", c.mean),
                };
                if best[j] == Some(i) {
                    let _ = write!(out, " **{text}** |");
                } else {
                    let _ = write!(out, " {text} |");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One point of a few-shot curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub base: Language,
    pub helper: Option<Language>,
    pub fraction: f64,
    pub train_size: usize,
    pub macro_f1: CellStat,
}

/// Few-shot points grouped by (base, helper) and ordered by fraction.
pub fn few_shot_points<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(Language, Option<Language>, u64), (usize, Vec<f64>)> = BTreeMap::new();
    for r in records {
        if let super::record::TrainingSetting::FewShot {
            base,
            helper,
            fraction,
        } = r.setting
        {
            if r.test_language != base {
                continue;
            }
            let key = (base, helper, (fraction * 1e6).round() as u64);
            let entry = groups.entry(key).or_insert((r.train_size, Vec::new()));
            entry.1.push(r.metrics.macro_f1);
        }
    }
    groups
        .into_iter()
        .filter_map(|((base, helper, f), (train_size, v))| {
            Some(CurvePoint {
                base,
                helper,
                fraction: f as f64 / 1e6,
                train_size,
                macro_f1: CellStat::from_values(&v)?,
            })
        })
        .collect()
}

pub fn few_shot_csv(points: &[CurvePoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["base", "helper", "fraction", "train_size", "macro_f1", "std", "seeds"])?;
    for p in points {
        w.write_record([
            p.base.display_name(),
            p.helper.map(|h| h.display_name()).unwrap_or_else(|| "none".into()),
            format!("{:.4}", p.fraction),
            p.train_size.to_string(),
            format!("{:.6}", p.macro_f1.mean),
            format!("{:.6}", p.macro_f1.std),
            p.macro_f1.n.to_string(),
        ])?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_stat_matches_hand_computation() {
        let s = CellStat::from_values(&[0.5, 0.7]).unwrap();
        assert!((s.mean - 0.6).abs() < 1e-12);
        assert!((s.std - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(CellStat::from_values(&[0.4]).unwrap().std, 0.0);
        assert!(CellStat::from_values(&[]).is_none());
    }

    #[test]
    fn markdown_bolds_column_best() {
        let stat = |m| Some(CellStat { mean: m, std: 0.0, n: 1 });
        let m = ResultsMatrix {
            rows: vec!["A".into(), "B".into()],
            columns: vec![Language::En, Language::Da],
            cells: vec![vec![stat(0.9), stat(0.2)], vec![stat(0.5), stat(0.6)]],
        };
        let md = m.to_markdown();
        assert!(md.contains("| A | **0.900** | 0.200 |"));
        assert!(md.contains("| B | 0.500 | **0.600** |"));
        assert!(m.is_complete());
        assert_eq!(m.to_csv().unwrap().lines().next().unwrap(), "setting,English,Danish");
    }
}
