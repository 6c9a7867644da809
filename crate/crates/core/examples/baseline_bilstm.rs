//! The bidirectional LSTM baseline next to the encoder on the same language.

use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::Language;
use xlod::protocols::Harness;

fn main() -> xlod::Result<()> {
    let catalog = SyntheticCatalogSpec::disjoint(1, 0).generate()?;
    let lang = Language::Synthetic(0);
    for model in [ModelConfig::desk_baseline(), ModelConfig::desk()] {
        let harness = Harness::new(&catalog, model, TrainingConfig::desk())?;
        let record = harness.run_monolingual(lang)?;
        println!(
            "{:<22} macro-F1 {:.3}  ({:.1}s)",
            record.row_label(),
            record.metrics.macro_f1,
            record.wall_time_secs
        );
    }
    Ok(())
}
