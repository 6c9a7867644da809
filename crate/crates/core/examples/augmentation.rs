//! Trains on language A plus language B and compares with A alone, both
//! tested on A.

use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::Language;
use xlod::protocols::Harness;

fn main() -> xlod::Result<()> {
    let catalog = SyntheticCatalogSpec::disjoint(2, 0).generate()?;
    let harness = Harness::new(&catalog, ModelConfig::desk(), TrainingConfig::desk())?;
    let (a, b) = (Language::Synthetic(0), Language::Synthetic(1));
    for record in [harness.run_monolingual(a)?, harness.run_augmentation(a, b)?] {
        println!(
            "{:<36} train {:>3}  macro-F1 {:.3}",
            record.row_label(),
            record.train_size,
            record.metrics.macro_f1
        );
    }
    Ok(())
}
