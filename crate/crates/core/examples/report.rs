//! Runs a small grid and curve into a results directory, then rebuilds every
//! report format from the persisted records alone.
//!
//! `cargo run --example report -- <results-dir>` (default `results/example`)

use std::path::PathBuf;

use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::Language;
use xlod::protocols::Harness;
use xlod::report::{emit_report, ReportFormat};

fn main() -> xlod::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results/example"));
    let catalog = SyntheticCatalogSpec::disjoint(2, 0).generate()?;
    let harness = Harness::new(&catalog, ModelConfig::desk(), TrainingConfig::desk())?
        .with_output(&dir, true, false)
        .with_jobs(3);
    harness.run_zero_shot_matrix()?;
    let (a, b) = (Language::Synthetic(0), Language::Synthetic(1));
    harness.run_augmentation(a, b)?;
    harness.run_few_shot_curve(a, Some(b), &[0.1, 0.3, 1.0])?;

    for format in [ReportFormat::Csv, ReportFormat::MarkdownTable, ReportFormat::PngPlot, ReportFormat::Html] {
        for path in emit_report(&dir, format)? {
            println!("wrote {}", path.display());
        }
    }
    print!("{}", std::fs::read_to_string(dir.join("report/report.md"))?);
    Ok(())
}
