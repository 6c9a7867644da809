//! Few-shot curve on language A, alone and with all of language B added.

use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::Language;
use xlod::protocols::{few_shot_csv, few_shot_points, Harness};

fn main() -> xlod::Result<()> {
    let catalog = SyntheticCatalogSpec::disjoint(2, 0).generate()?;
    let harness = Harness::new(&catalog, ModelConfig::desk(), TrainingConfig::desk())?.with_jobs(4);
    let (a, b) = (Language::Synthetic(0), Language::Synthetic(1));
    let fractions = [0.05, 0.1, 0.2, 0.4, 0.7, 1.0];
    let mut records = harness.run_few_shot_curve(a, None, &fractions)?;
    records.extend(harness.run_few_shot_curve(a, Some(b), &fractions)?);
    print!("{}", few_shot_csv(&few_shot_points(&records))?);
    Ok(())
}
