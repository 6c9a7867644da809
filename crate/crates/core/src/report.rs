//! Tables and plots rebuilt from persisted run records.
//!
//! Output is a pure function of the records on disk: rerunning on the same
//! directory rewrites byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::protocols::{few_shot_csv, few_shot_points, load_records, CurvePoint, ResultsMatrix, RunRecord, TrainingSetting};

pub const REPORT_DIR: &str = "report";
/// Overrides the font used for PNG labels.
pub const FONT_ENV: &str = "XLOD_FONT";

const FONT_CANDIDATES: &[&str] = &[
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/TTF/DejaVuSans.ttf",
    "/Library/Fonts/Arial.ttf",
    "C:\\Windows\\Fonts\\arial.ttf",
];

const PALETTE: &[(u8, u8, u8)] = &[
    (31, 119, 180),
    (214, 39, 40),
    (44, 160, 44),
    (148, 103, 189),
    (255, 127, 14),
    (23, 190, 207),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    MarkdownTable,
    PngPlot,
    Html,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "markdown_table" | "md" => Ok(Self::MarkdownTable),
            "png" | "png_plot" => Ok(Self::PngPlot),
            "html" => Ok(Self::Html),
            other => Err(Error::arg(format!(
                "unknown report format {other:?} (csv, markdown, png, html)"
            ))),
        }
    }
}

/// The three result views derived from a set of records.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTables {
    /// Monolingual and joint models against every test language.
    pub matrix: Option<ResultsMatrix>,
    /// Monolingual versus augmented training, on the base languages.
    pub augmentation: Option<ResultsMatrix>,
    pub few_shot: Vec<CurvePoint>,
}

impl ReportTables {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let grid: Vec<&RunRecord> = records
            .iter()
            .filter(|r| {
                matches!(
                    r.setting,
                    TrainingSetting::Monolingual { .. } | TrainingSetting::JointAll { .. }
                )
            })
            .collect();
        let bases: Vec<Language> = records
            .iter()
            .filter_map(|r| match r.setting {
                TrainingSetting::Augmented { base, .. } => Some(base),
                _ => None,
            })
            .collect();
        let aug: Vec<&RunRecord> = records
            .iter()
            .filter(|r| match r.setting {
                TrainingSetting::Augmented { base, .. } => r.test_language == base,
                TrainingSetting::Monolingual { language } => {
                    bases.contains(&language) && r.test_language == language
                }
                _ => false,
            })
            .collect();
        let non_empty = |m: ResultsMatrix| (!m.rows.is_empty()).then_some(m);
        Self {
            matrix: non_empty(ResultsMatrix::from_records(ordered(grid))),
            augmentation: non_empty(ResultsMatrix::from_records(ordered(aug))),
            few_shot: few_shot_points(records),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Results\n");
        if let Some(m) = &self.matrix {
            out.push_str("\n## Macro-F1 by training setting and test language\n\n");
            out.push_str(&m.to_markdown());
        }
        if let Some(m) = &self.augmentation {
            out.push_str("\n## Data augmentation\n\n");
            out.push_str(&m.to_markdown());
        }
        if !self.few_shot.is_empty() {
            out.push_str("\n## Few-shot curves\n\n| Base | Helper | Fraction | Train size | Macro-F1 |\n|---|---|---:|---:|---:|\n");
            for p in &self.few_shot {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.2} | {} | {:.3} |",
                    p.base.display_name(),
                    p.helper.map(|h| h.display_name()).unwrap_or_else(|| "none".into()),
                    p.fraction,
                    p.train_size,
                    p.macro_f1.mean
                );
            }
        }
        out
    }
}

/// Baseline rows first, then monolingual rows in language order, then the
/// rest; keeps row order independent of file names.
fn ordered(mut records: Vec<&RunRecord>) -> Vec<&RunRecord> {
    let rank = |r: &RunRecord| {
        let setting = match &r.setting {
            TrainingSetting::Monolingual { language } => (0, Some(*language)),
            TrainingSetting::JointAll { .. } => (1, None),
            TrainingSetting::Augmented { base, .. } => (2, Some(*base)),
            TrainingSetting::FewShot { base, .. } => (3, Some(*base)),
        };
        (r.architecture != crate::classifier::Architecture::BiLstm, setting, r.row_label())
    };
    records.sort_by_key(|r| rank(r));
    records
}

/// Writes the requested report under `<results_dir>/report/` and returns the
/// files written.
pub fn emit_report(results_dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let records = load_records(results_dir)?;
    let tables = ReportTables::from_records(&records);
    let out_dir = results_dir.join(REPORT_DIR);
    fs::create_dir_all(&out_dir)?;
    let mut written = Vec::new();
    let mut write = |name: &str, contents: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    match format {
        ReportFormat::Csv => {
            if let Some(m) = &tables.matrix {
                write("matrix.csv", m.to_csv()?.as_bytes())?;
            }
            if let Some(m) = &tables.augmentation {
                write("augmentation.csv", m.to_csv()?.as_bytes())?;
            }
            if !tables.few_shot.is_empty() {
                write("fewshot.csv", few_shot_csv(&tables.few_shot)?.as_bytes())?;
            }
        }
        ReportFormat::MarkdownTable => write("report.md", tables.to_markdown().as_bytes())?,
        ReportFormat::Html => write("report.html", render_html(&tables).as_bytes())?,
        ReportFormat::PngPlot => {
            if !tables.few_shot.is_empty() {
                let path = out_dir.join("fewshot.png");
                plot_curves_png(&tables.few_shot, &path)?;
                written.push(path);
            }
            if let Some(m) = &tables.matrix {
                let path = out_dir.join("matrix.png");
                plot_matrix_png(m, &path)?;
                written.push(path);
            }
            if written.is_empty() {
                return Err(Error::Plot("records contain nothing to plot".into()));
            }
        }
    }
    Ok(written)
}

fn font_available() -> bool {
    static REGISTERED: OnceLock<bool> = OnceLock::new();
    *REGISTERED.get_or_init(|| {
        let candidates = std::env::var(FONT_ENV)
            .ok()
            .into_iter()
            .chain(FONT_CANDIDATES.iter().map(|s| s.to_string()));
        for path in candidates {
            if let Ok(bytes) = fs::read(&path) {
                // plotters keeps a 'static reference to registered fonts.
                let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
                if plotters::style::register_font("sans-serif", FontStyle::Normal, bytes).is_ok() {
                    return true;
                }
            }
        }
        log::warn!("no usable font found; plots are drawn without text");
        false
    })
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn series_name(p: &CurvePoint) -> String {
    match p.helper {
        Some(h) => format!("{} + {}", p.base.display_name(), h.display_name()),
        None => p.base.display_name(),
    }
}

fn curves(points: &[CurvePoint]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        let name = series_name(p);
        match out.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.push((p.fraction, p.macro_f1.mean)),
            None => out.push((name, vec![(p.fraction, p.macro_f1.mean)])),
        }
    }
    out
}

fn plot_curves_png(points: &[CurvePoint], path: &Path) -> Result<()> {
    let with_text = font_available();
    let root = BitMapBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let series = curves(points);
    let mut builder = ChartBuilder::on(&root);
    builder.margin(20);
    if with_text {
        builder
            .caption("Few-shot macro-F1", ("sans-serif", 24))
            .x_label_area_size(40)
            .y_label_area_size(50);
    }
    let mut chart = builder
        .build_cartesian_2d(0.0..1.0, 0.0..1.0)
        .map_err(plot_err)?;
    if with_text {
        chart
            .configure_mesh()
            .x_desc("fraction of base training data")
            .y_desc("macro-F1")
            .draw()
            .map_err(plot_err)?;
    }
    for (i, (name, pts)) in series.into_iter().enumerate() {
        let (r, g, b) = PALETTE[i % PALETTE.len()];
        let color = RGBColor(r, g, b);
        let line = chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(plot_err)?;
        if with_text {
            line.label(name).legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
        }
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
            .map_err(plot_err)?;
    }
    if with_text {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::LowerRight)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

fn plot_matrix_png(m: &ResultsMatrix, path: &Path) -> Result<()> {
    let with_text = font_available();
    let (cell_w, cell_h, left, top) = (110i32, 40i32, 220i32, 50i32);
    let width = (left + cell_w * m.columns.len() as i32 + 20) as u32;
    let height = (top + cell_h * m.rows.len() as i32 + 20) as u32;
    let root = BitMapBackend::new(path, (width, height)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let text = |s: String, x: i32, y: i32| Text::new(s, (x, y), ("sans-serif", 16).into_font());
    for (j, c) in m.columns.iter().enumerate() {
        if with_text {
            root.draw(&text(c.display_name(), left + j as i32 * cell_w + 8, top - 30))
                .map_err(plot_err)?;
        }
    }
    for (i, (label, row)) in m.rows.iter().zip(&m.cells).enumerate() {
        let y = top + i as i32 * cell_h;
        if with_text {
            root.draw(&text(label.clone(), 8, y + 12)).map_err(plot_err)?;
        }
        for (j, cell) in row.iter().enumerate() {
            let x = left + j as i32 * cell_w;
            let fill = match cell {
                Some(c) => {
                    let v = c.mean.clamp(0.0, 1.0);
                    RGBColor(
                        (255.0 - 200.0 * v) as u8,
                        (255.0 - 120.0 * v) as u8,
                        255,
                    )
                }
                None => RGBColor(230, 230, 230),
            };
            root.draw(&Rectangle::new([(x, y), (x + cell_w - 2, y + cell_h - 2)], fill.filled()))
                .map_err(plot_err)?;
            if let (Some(c), true) = (cell, with_text) {
                root.draw(&text(format!("{:.3}", c.mean), x + 30, y + 12))
                    .map_err(plot_err)?;
            }
        }
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn html_table(m: &ResultsMatrix) -> String {
    let best = m.column_best();
    let mut out = String::from("<table>\n<thead><tr><th>Setting</th>");
    for c in &m.columns {
        let _ = write!(out, "<th>{}</th>", escape(&c.display_name()));
    }
    out.push_str("</tr></thead>\n<tbody>\n");
    for (i, (label, row)) in m.rows.iter().zip(&m.cells).enumerate() {
        let _ = write!(out, "<tr><td>{}</td>", escape(label));
        for (j, cell) in row.iter().enumerate() {
            let text = match cell {
                None => "-".to_string(),
                Some(c) if c.n > 1 => format!("{:.3} &plusmn; {:.3}", c.mean, c.std),
                Some(c) => format!("{:.3}", c.mean),
            };
            if best[j] == Some(i) {
                let _ = write!(out, "<td><strong>{text}</strong></td>");
            } else {
                let _ = write!(out, "<td>{text}</td>");
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</tbody>\n</table>\n");
    out
}

fn curves_svg(points: &[CurvePoint]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let sx = |x: f64| pad + x * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y * (h - 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>"
    );
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{v:.2}</text>",
            sx(0.0),
            sy(v),
            sx(1.0),
            sy(v),
            sx(0.0) - 6.0,
            sy(v) + 4.0,
            sx(v),
            sy(0.0) + 16.0,
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">fraction of base training data</text>",
        w / 2.0,
        h - 8.0
    );
    for (i, (name, pts)) in curves(points).iter().enumerate() {
        let (r, g, b) = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"rgb({r},{g},{b})\" stroke-width=\"2\" points=\"{}\"/>",
            coords.join(" ")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"rgb({r},{g},{b})\">{}</text>",
            w - pad - 150.0,
            h - pad - 20.0 - 16.0 * i as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_html(tables: &ReportTables) -> String {
    let mut body = String::new();
    if let Some(m) = &tables.matrix {
        body.push_str("<h2>Macro-F1 by training setting and test language</h2>\n");
        body.push_str(&html_table(m));
    }
    if let Some(m) = &tables.augmentation {
        body.push_str("<h2>Data augmentation</h2>\n");
        body.push_str(&html_table(m));
    }
    if !tables.few_shot.is_empty() {
        body.push_str("<h2>Few-shot curves</h2>\n<figure>\n");
        body.push_str(&curves_svg(&tables.few_shot));
        body.push_str("</figure>\n");
    }
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Results</title>\n\
         <style>\nbody {{ font-family: sans-serif; margin: 2em; }}\n\
         table {{ border-collapse: collapse; margin-bottom: 1.5em; }}\n\
         th, td {{ border: 1px solid #ccc; padding: 0.3em 0.7em; text-align: right; }}\n\
         td:first-child {{ text-align: left; }}\n</style>\n</head>\n<body>\n<h1>Results</h1>\n{body}</body>\n</html>\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_names_parse() {
        assert_eq!("markdown".parse::<ReportFormat>().unwrap(), ReportFormat::MarkdownTable);
        assert_eq!("png".parse::<ReportFormat>().unwrap(), ReportFormat::PngPlot);
        assert!("pdf".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn missing_records_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_report(dir.path(), ReportFormat::Csv),
            Err(Error::NoRecords { .. })
        ));
    }
}
