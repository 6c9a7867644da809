//! Loading encoders from Hugging Face-style checkpoint directories.

mod common;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use candle_core::Tensor;
use xlod::classifier::layers::ForwardMode;
use xlod::classifier::{build_classifier, Classifier, ModelConfig, CACHE_ENV};
use xlod::corpus::synthetic::SyntheticLanguageSpec;
use xlod::corpus::Split;
use xlod::tokenizer::Vocabulary;
use xlod::Error;

fn desk_source() -> (Classifier, Vec<String>) {
    let corpus = SyntheticLanguageSpec::new(0).generate(0).unwrap();
    let train = corpus.split(Split::Train);
    let model = ModelConfig::desk();
    let vocab = Vocabulary::build(train, model.vocab_min_count, model.lowercase).unwrap();
    let texts = train.iter().take(6).map(|e| e.text.clone()).collect();
    (build_classifier(&model, Some(&vocab)).unwrap(), texts)
}

/// Writes `classifier` the way upstream checkpoints are laid out: encoder
/// tensors under `bert.`, some layer norms under legacy names.
fn export(classifier: &Classifier, dir: &Path, with_head: bool) {
    fs::create_dir_all(dir).unwrap();
    let config = classifier.config();
    let dims = classifier.encoder_dims().unwrap();
    let tensors: HashMap<String, Tensor> = classifier
        .params()
        .tensors()
        .into_iter()
        .filter(|(name, _)| with_head || !name.starts_with("classifier."))
        .map(|(name, t)| {
            if name.starts_with("classifier.") {
                return (name, t);
            }
            let name = match name.strip_prefix("embeddings.LayerNorm.") {
                Some("weight") => "embeddings.LayerNorm.gamma".to_string(),
                Some("bias") => "embeddings.LayerNorm.beta".to_string(),
                _ => name,
            };
            (format!("bert.{name}"), t)
        })
        .collect();
    candle_core::safetensors::save(&tensors, dir.join("model.safetensors")).unwrap();
    classifier.tokenizer().vocab().save(&dir.join("vocab.txt")).unwrap();
    let hf = serde_json::json!({
        "vocab_size": dims.vocab_size,
        "hidden_size": config.hidden_size,
        "num_hidden_layers": config.num_blocks,
        "num_attention_heads": config.num_attention_heads,
        "intermediate_size": dims.intermediate,
        "max_position_embeddings": dims.max_positions,
        "type_vocab_size": 2,
        "layer_norm_eps": 1e-12,
        "hidden_dropout_prob": 0.1,
        "do_lower_case": false
    });
    fs::write(dir.join("config.json"), hf.to_string()).unwrap();
}

fn logits(classifier: &Classifier, texts: &[String]) -> Vec<f64> {
    let encodings: Vec<_> = texts.iter().map(|t| classifier.encode(t)).collect();
    let refs: Vec<_> = encodings.iter().collect();
    let batch = classifier.batch(&refs).unwrap();
    classifier
        .logits(&batch, &mut ForwardMode::eval())
        .unwrap()
        .flatten_all()
        .unwrap()
        .to_vec1()
        .unwrap()
}

fn loaded_config(encoder_id: &str) -> ModelConfig {
    ModelConfig {
        encoder_id: encoder_id.to_string(),
        ..ModelConfig::desk()
    }
}

#[test]
fn exported_encoder_reloads_with_identical_logits() {
    let (source, texts) = desk_source();
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("tiny-bert");
    export(&source, &ckpt, true);

    let loaded = build_classifier(&loaded_config(ckpt.to_str().unwrap()), None).unwrap();
    assert_eq!(loaded.parameter_count(), source.parameter_count());
    assert_eq!(logits(&loaded, &texts), logits(&source, &texts));
}

#[test]
fn headless_checkpoint_gets_a_seeded_head() {
    let (source, texts) = desk_source();
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("encoder-only");
    export(&source, &ckpt, false);

    let config = loaded_config(ckpt.to_str().unwrap());
    let a = build_classifier(&config, None).unwrap();
    let b = build_classifier(&config, None).unwrap();
    assert_eq!(a.head_parameter_count(), config.hidden_size + 1);
    assert_eq!(logits(&a, &texts), logits(&b, &texts));
}

#[test]
fn shape_disagreement_is_an_argument_error() {
    let (source, _) = desk_source();
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("tiny-bert");
    export(&source, &ckpt, true);

    let config = ModelConfig {
        num_blocks: 3,
        ..loaded_config(ckpt.to_str().unwrap())
    };
    let err = build_classifier(&config, None).unwrap_err();
    assert!(matches!(err, Error::Argument(_)), "{err:?}");
}

#[test]
fn encoders_resolve_through_the_cache_directory() {
    // The only test in this binary that touches the environment.
    let (source, texts) = desk_source();
    let cache = tempfile::tempdir().unwrap();
    export(&source, &cache.path().join("tiny-bert"), true);
    std::env::set_var(CACHE_ENV, cache.path());

    let loaded = build_classifier(&loaded_config("tiny-bert"), None).unwrap();
    assert_eq!(logits(&loaded, &texts), logits(&source, &texts));

    let err = build_classifier(&loaded_config("not-downloaded"), None).unwrap_err();
    assert!(matches!(err, Error::CheckpointUnavailable { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 8);

    fs::remove_file(cache.path().join("tiny-bert/model.safetensors")).unwrap();
    let err = build_classifier(&loaded_config("tiny-bert"), None).unwrap_err();
    assert!(matches!(err, Error::CheckpointUnavailable { .. }), "{err:?}");
}
