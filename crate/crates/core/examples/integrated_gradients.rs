//! Explains a trained desk model's prediction with Integrated Gradients and
//! shows the completeness residual shrinking as the step count grows.

use xlod::attribution::{integrated_gradients, render_terminal, AttributionConfig};
use xlod::classifier::{build_classifier, fine_tune, ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticLanguageSpec;
use xlod::corpus::{Label, Split};
use xlod::tokenizer::Vocabulary;

fn main() -> xlod::Result<()> {
    let corpus = SyntheticLanguageSpec::new(0).generate(3)?;
    let train = corpus.split(Split::Train);
    let model = ModelConfig::desk();
    let vocab = Vocabulary::build(train, model.vocab_min_count, model.lowercase)?;
    let checkpoint = fine_tune(build_classifier(&model, Some(&vocab))?, train, None, &TrainingConfig::desk())?;

    let example = corpus
        .split(Split::Test)
        .iter()
        .find(|e| e.label == Label::Offensive)
        .expect("test split has offensive examples");
    let color = std::env::var_os("NO_COLOR").is_none();

    for steps in [2, 8, 32, 128, 256] {
        let config = AttributionConfig {
            num_steps: steps,
            ..AttributionConfig::default()
        };
        let result = integrated_gradients(&checkpoint, example, &config)?;
        println!("m = {steps:>3}: residual {:.3e}", result.completeness_residual);
        if steps == 256 {
            print!("{}", render_terminal(&result, color));
        }
    }
    Ok(())
}
