//! Zero-shot grid on two generated languages with disjoint offensive
//! lexicons: one model per language plus a joint model, each tested on both.

use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::protocols::Harness;

fn main() -> xlod::Result<()> {
    let catalog = SyntheticCatalogSpec::disjoint(2, 0).generate()?;
    let harness = Harness::new(&catalog, ModelConfig::desk(), TrainingConfig::desk())?.with_jobs(3);
    let started = std::time::Instant::now();
    let outcome = harness.run_zero_shot_matrix()?;
    println!("{}", outcome.matrix.to_markdown());
    println!("{} runs in {:.1?}", outcome.records.len(), started.elapsed());
    Ok(())
}
