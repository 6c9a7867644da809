#![allow(dead_code)]

use std::fs;
use std::path::Path;

use xlod::classifier::{build_classifier, fine_tune, Checkpoint, ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticLanguageSpec;
use xlod::corpus::{LabeledExample, LanguageCorpus, Split};
use xlod::tokenizer::Vocabulary;

/// Desk model trained on `train` with the desk recipe and `epochs`.
pub fn train_desk(train: &[LabeledExample], epochs: usize, seed: u64) -> Checkpoint {
    let model = ModelConfig::desk();
    let vocab = Vocabulary::build(train, model.vocab_min_count, model.lowercase).unwrap();
    let handle = build_classifier(&model, Some(&vocab)).unwrap();
    let training = TrainingConfig {
        epochs,
        seed,
        ..TrainingConfig::desk()
    };
    fine_tune(handle, train, None, &training).unwrap()
}

/// Canonical desk fixture: the default generated language A, trained with
/// the default desk recipe.
pub fn desk_fixture() -> (LanguageCorpus, Checkpoint) {
    let corpus = SyntheticLanguageSpec::new(0).generate(0).unwrap();
    let checkpoint = train_desk(corpus.split(Split::Train), TrainingConfig::desk().epochs, 0);
    (corpus, checkpoint)
}

/// Writes `corpus` as OLID-style `train/dev/test.tsv` under `dir/<stem>/`.
pub fn write_olid(corpus: &LanguageCorpus, dir: &Path) {
    let lang_dir = dir.join(corpus.language.file_stem());
    fs::create_dir_all(&lang_dir).unwrap();
    for split in [Split::Train, Split::Dev, Split::Test] {
        let mut out = String::from("id\ttweet\tsubtask_a\tsubtask_b\n");
        for e in corpus.split(split) {
            out.push_str(&format!("{}\t{}\t{}\tNULL\n", e.id, e.text, e.label));
        }
        fs::write(lang_dir.join(format!("{split}.tsv")), out).unwrap();
    }
}
