//! Fine-tunes a small randomly initialized encoder on one generated language
//! and reports training and test macro-F1.

use xlod::classifier::{build_classifier, fine_tune, predict_proba, ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticLanguageSpec;
use xlod::corpus::{Label, Split};
use xlod::metrics::macro_f1;
use xlod::tokenizer::Vocabulary;

fn main() -> xlod::Result<()> {
    let corpus = SyntheticLanguageSpec::new(0).generate(7)?;
    let train = corpus.split(Split::Train);
    let model = ModelConfig::desk();
    let vocab = Vocabulary::build(train, model.vocab_min_count, model.lowercase)?;
    let handle = build_classifier(&model, Some(&vocab))?;
    println!("parameters: {}", handle.parameter_count());

    let training = TrainingConfig::desk();
    let started = std::time::Instant::now();
    let checkpoint = fine_tune(handle, train, Some(corpus.split(Split::Dev)), &training)?;
    println!("trained {} steps in {:.1?}", checkpoint.steps, started.elapsed());
    for (epoch, loss) in checkpoint.per_epoch_train_loss.iter().enumerate() {
        println!("epoch {:>2}  loss {loss:.4}", epoch + 1);
    }

    for split in [Split::Train, Split::Test] {
        let examples = corpus.split(split);
        let preds = predict_proba(&checkpoint, examples)?;
        let gold: Vec<Label> = examples.iter().map(|e| e.label).collect();
        println!("{split} macro-F1 {:.3}", macro_f1(&gold, &preds.labels)?.macro_f1);
    }
    Ok(())
}
