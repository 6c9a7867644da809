use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AttributionResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderFormat {
    Terminal,
    PlainText,
    Html,
}

pub fn render_importance(result: &AttributionResult, format: RenderFormat) -> String {
    match format {
        RenderFormat::Terminal => render_terminal(result, true),
        RenderFormat::PlainText => render_terminal(result, false),
        RenderFormat::Html => render_html(result),
    }
}

fn max_abs(result: &AttributionResult) -> f64 {
    result
        .words
        .iter()
        .map(|w| w.score.abs())
        .fold(0.0, f64::max)
}

/// Red for evidence of OFFENSIVE, green for NOT; `strength` in [0, 1].
fn rgb(score: f64, strength: f64) -> (u8, u8, u8) {
    let fade = |c: f64| (255.0 - (255.0 - c) * strength).round() as u8;
    if score >= 0.0 {
        (fade(220.0), fade(40.0), fade(40.0))
    } else {
        (fade(40.0), fade(170.0), fade(60.0))
    }
}

fn header(result: &AttributionResult) -> String {
    format!(
        "prediction {} (p={:.3}), completeness residual {:.2e} over {} steps",
        result.predicted_label, result.prediction, result.completeness_residual, result.num_steps
    )
}

/// One line per call: words with 24-bit background colours, or with the
/// signed score in brackets when `color` is off.
pub fn render_terminal(result: &AttributionResult, color: bool) -> String {
    let scale = max_abs(result);
    let mut out = header(result);
    out.push('\n');
    let rendered: Vec<String> = result
        .words
        .iter()
        .map(|w| {
            if color {
                let strength = if scale > 0.0 { w.score.abs() / scale } else { 0.0 };
                let (r, g, b) = rgb(w.score, strength);
                format!("\x1b[48;2;{r};{g};{b}m\x1b[38;2;0;0;0m{}\x1b[0m", w.word)
            } else {
                format!("{}[{:+.3}]", w.word, w.score)
            }
        })
        .collect();
    out.push_str(&rendered.join(" "));
    out.push('\n');
    out
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// A standalone HTML5 document highlighting each word.
pub fn render_html(result: &AttributionResult) -> String {
    let scale = max_abs(result);
    let mut body = String::new();
    for w in &result.words {
        let strength = if scale > 0.0 { w.score.abs() / scale } else { 0.0 };
        let (r, g, b) = rgb(w.score, strength);
        let _ = write!(
            body,
            "<span style=\"background-color: rgb({r}, {g}, {b})\" title=\"{:+.4}\">{}</span> ",
            w.score,
            escape(&w.word)
        );
    }
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>Token attributions</title>\n<style>\n\
         body {{ font-family: sans-serif; margin: 2em; }}\n\
         span {{ padding: 0.1em 0.2em; border-radius: 0.2em; }}\n\
         </style>\n</head>\n<body>\n<header><p>{}</p></header>\n<p>{}</p>\n</body>\n</html>\n",
        escape(&header(result)),
        body.trim_end()
    )
}
