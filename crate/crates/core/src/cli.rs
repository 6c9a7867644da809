//! Command-line surface: argument types, experiment config parsing with
//! dotted overrides, and dispatch to the library.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::attribution::{
    attribute_text, collect_false_positives, render_importance, AttributionConfig, RenderFormat,
};
use crate::classifier::{predict_proba, Checkpoint};
use crate::corpus::synthetic::SyntheticCatalogSpec;
use crate::corpus::{
    corpus_summary, load_corpus, summary_markdown, CorpusCatalog, CorpusFormat, Label, Language, Split,
};
use crate::error::{Error, Result};
use crate::metrics::macro_f1;
use crate::protocols::{run_experiment, write_predictions, ExperimentKind, ExperimentSpec, RunRecord};
use crate::report::{emit_report, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "xlod", version, about = "Cross-lingual offensive language detection experiments")]
pub struct CliInvocation {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for data order, dropout and initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Independent trainings to run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Overwrite existing run records.
    #[arg(long, global = true)]
    pub force: bool,

    /// Repeat the experiment over this many consecutive seeds.
    #[arg(long, global = true, default_value_t = 1)]
    pub repeat: usize,

    /// Config override `dotted.key=value`; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load corpora and print their sizes and class balance.
    Ingest {
        /// Directory holding one `<lang>/` folder per language.
        #[arg(long, required_unless_present = "synthetic")]
        data: Option<PathBuf>,
        #[arg(long = "language", value_name = "LANG")]
        languages: Vec<Language>,
        /// Generate this many synthetic languages instead.
        #[arg(long, conflicts_with = "data")]
        synthetic: Option<u8>,
    },
    /// Run the experiment described by a config file as written.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a saved checkpoint on one split of one language.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        language: Language,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Also write per-example predictions as TSV.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Train per-language and joint models and test each on every language.
    Matrix {
        #[arg(long)]
        config: PathBuf,
    },
    /// Few-shot learning curve over fractions of the base language.
    Fewshot {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train on a base language augmented with a helper language.
    Augment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrated Gradients token attributions for a checkpoint.
    Attribute {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Text to explain.
        #[arg(long, conflicts_with = "false_positives")]
        text: Option<String>,
        /// Explain the N most confident false positives of a data split.
        #[arg(long, requires_all = ["data", "language"])]
        false_positives: Option<usize>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        language: Option<Language>,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = RenderArg::Terminal)]
        format: RenderArg,
        /// Write the rendering here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild tables and plots from persisted run records.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RenderArg {
    Terminal,
    Plain,
    Html,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
    Png,
    Html,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::MarkdownTable,
            FormatArg::Png => ReportFormat::PngPlot,
            FormatArg::Html => ReportFormat::Html,
        }
    }
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Reads a JSON experiment config, applies `key=value` overrides, fills
/// defaults and validates. Unknown keys, in the file or in overrides, are
/// errors naming the key.
pub fn parse_experiment_config(path: &Path, overrides: &[String]) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
    parse_experiment_str(&text, overrides, None)
}

/// Like [`parse_experiment_config`] for an in-memory document. A `kind`,
/// when given, replaces the document's own.
pub fn parse_experiment_str(
    text: &str,
    overrides: &[String],
    kind: Option<ExperimentKind>,
) -> Result<ExperimentSpec> {
    let mut raw: Value = serde_json::from_str(text)
        .map_err(|e| config_error("(document)", format!("invalid JSON: {e}")))?;
    if let (Some(kind), Some(obj)) = (kind, raw.as_object_mut()) {
        obj.insert("kind".into(), serde_json::to_value(kind)?);
    }
    let spec: ExperimentSpec = typed(raw)?;
    let mut value = serde_json::to_value(&spec)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let mut spec: ExperimentSpec = typed(value)?;
    spec.fill_defaults();
    spec.validate()?;
    Ok(spec)
}

fn typed(value: Value) -> Result<ExperimentSpec> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "(top level)".to_string() } else { path };
        config_error(key, e.into_inner().to_string())
    })
}

/// Sets `dotted.key` (array elements by index) to `value`, parsed as JSON
/// when possible and as a bare string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    for segment in key.split('.') {
        let unknown = || config_error(key, "unknown key");
        node = match node {
            Value::Object(map) => map.get_mut(segment).ok_or_else(unknown)?,
            Value::Array(items) => {
                let i: usize = segment.parse().map_err(|_| unknown())?;
                items.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    *node = value;
    Ok(())
}

fn load_catalog(data: &Path, languages: &[Language]) -> Result<CorpusCatalog> {
    if languages.is_empty() {
        return Err(Error::arg("name at least one --language"));
    }
    CorpusCatalog::from_corpora(
        languages
            .iter()
            .map(|&l| load_corpus(data, l, CorpusFormat::OlidTsv))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn print_records(out: &mut dyn Write, records: &[RunRecord]) -> Result<()> {
    for r in records {
        writeln!(
            out,
            "{} -> {}: macro-F1 {:.4} (train {}, seed {})",
            r.row_label(),
            r.test_language.display_name(),
            r.metrics.macro_f1,
            r.train_size,
            r.seed
        )?;
    }
    Ok(())
}

impl CliInvocation {
    fn experiment(&self, config: &Path, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
        let text = fs::read_to_string(config)
            .map_err(|e| config_error(config.display().to_string(), e.to_string()))?;
        let spec = parse_experiment_str(&text, &self.overrides, kind)?;
        Ok(match self.seed {
            Some(seed) => spec.with_seed(seed),
            None => spec,
        })
    }

    fn run_repeated(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        if self.repeat == 0 {
            return Err(Error::arg("--repeat must be at least 1"));
        }
        let first = spec.seed();
        for k in 0..self.repeat as u64 {
            let seeded = spec.clone().with_seed(first + k);
            let records = run_experiment(&seeded, self.force, self.jobs)?;
            print_records(out, &records)?;
        }
        writeln!(out, "records written under {}", spec.output_dir.display())?;
        Ok(())
    }
}

/// Executes a parsed invocation, writing human-readable output to `out`.
pub fn dispatch(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    if inv.jobs == 0 {
        return Err(Error::arg("--jobs must be at least 1"));
    }
    match &inv.command {
        Command::Ingest {
            data,
            languages,
            synthetic,
        } => {
            let catalog = match (data, synthetic) {
                (_, Some(n)) => SyntheticCatalogSpec::disjoint(*n, inv.seed.unwrap_or(0)).generate()?,
                (Some(dir), None) => load_catalog(dir, languages)?,
                (None, None) => return Err(Error::arg("give --data or --synthetic")),
            };
            write!(out, "{}", summary_markdown(&corpus_summary(&catalog)?))?;
        }
        Command::Train { config } => inv.run_repeated(&inv.experiment(config, None)?, out)?,
        Command::Matrix { config } => {
            inv.run_repeated(&inv.experiment(config, Some(ExperimentKind::ZeroShotMatrix))?, out)?
        }
        Command::Fewshot { config } => {
            inv.run_repeated(&inv.experiment(config, Some(ExperimentKind::FewShotCurve))?, out)?
        }
        Command::Augment { config } => {
            inv.run_repeated(&inv.experiment(config, Some(ExperimentKind::Augmentation))?, out)?
        }
        Command::Evaluate {
            checkpoint,
            data,
            language,
            split,
            predictions,
        } => {
            let ckpt = Checkpoint::load(checkpoint)?;
            let corpus = load_corpus(data, *language, CorpusFormat::OlidTsv)?;
            let examples = corpus.split((*split).into());
            let preds = predict_proba(&ckpt, examples)?;
            let gold: Vec<Label> = examples.iter().map(|e| e.label).collect();
            let report = macro_f1(&gold, &preds.labels)?;
            if let Some(path) = predictions {
                write_predictions(path, examples, &preds)?;
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Attribute {
            checkpoint,
            text,
            false_positives,
            data,
            language,
            split,
            steps,
            format,
            out: target,
        } => {
            let ckpt = Checkpoint::load(checkpoint)?;
            let config = AttributionConfig {
                num_steps: *steps,
                ..AttributionConfig::default()
            };
            let texts: Vec<String> = match (text, false_positives, data, language) {
                (Some(t), _, _, _) => vec![t.clone()],
                (None, Some(n), Some(dir), Some(lang)) => {
                    let corpus = load_corpus(dir, *lang, CorpusFormat::OlidTsv)?;
                    collect_false_positives(&ckpt, corpus.split((*split).into()), *n)?
                        .into_iter()
                        .map(|(e, _)| e.text)
                        .collect()
                }
                _ => return Err(Error::arg("give --text, or --false-positives with --data and --language")),
            };
            let no_color = std::env::var_os("NO_COLOR").is_some();
            let render = match format {
                RenderArg::Terminal if !no_color => RenderFormat::Terminal,
                RenderArg::Terminal | RenderArg::Plain => RenderFormat::PlainText,
                RenderArg::Html => RenderFormat::Html,
            };
            let threshold = ckpt.training_config.decision_threshold;
            let mut rendered = String::new();
            for t in &texts {
                let result = attribute_text(&ckpt.classifier, t, threshold, &config)?;
                rendered.push_str(&render_importance(&result, render));
            }
            match target {
                Some(path) => {
                    fs::write(path, rendered)?;
                    writeln!(out, "wrote {}", path.display())?;
                }
                None => write!(out, "{rendered}")?,
            }
        }
        Command::Report { results, format } => {
            for path in emit_report(results, (*format).into())? {
                writeln!(out, "wrote {}", path.display())?;
            }
        }
    }
    Ok(())
}

/// One-line diagnostic for `err`: `error[<category>]: <message>`.
pub fn error_line(err: &Error) -> String {
    format!("error[{}]: {}", err.category(), err)
}

/// Parses process arguments, runs, and returns the exit status. Usage errors
/// exit through clap with status 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let inv = CliInvocation::parse_from(args);
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(&inv, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}
