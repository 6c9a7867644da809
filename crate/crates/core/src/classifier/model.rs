use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::bert::{BertClassifier, EncoderDims};
use super::config::{Architecture, ModelConfig, CACHE_ENV};
use super::layers::{bce_with_logits, ForwardMode, ParamStore, Source};
use super::lstm::{BiLstmClassifier, LstmDims};
use crate::corpus::LabeledExample;
use crate::error::{Error, Result};
use crate::tokenizer::{Encoding, Vocabulary, WordPieceTokenizer};

#[derive(Debug, Clone)]
pub(crate) enum Network {
    Encoder(BertClassifier),
    BiLstm(BiLstmClassifier),
}

/// A classifier: tokenizer, parameters, and the network reading them.
#[derive(Debug, Clone)]
pub struct Classifier {
    config: ModelConfig,
    tokenizer: WordPieceTokenizer,
    store: ParamStore,
    net: Network,
}

/// Token ids and attention mask for a padded batch.
pub struct Batch {
    pub ids: Tensor,
    pub mask: Tensor,
    pub lengths: Vec<usize>,
}

/// Builds an untrained encoder classifier.
///
/// Desk encoders (`encoder_id == "desk-random"`) are randomly initialized over
/// `desk_vocab`. Any other id is resolved as a directory, first literally and
/// then under `$XLOD_CACHE_DIR`, holding `config.json`, `vocab.txt` and
/// `model.safetensors`.
pub fn build_classifier(config: &ModelConfig, desk_vocab: Option<&Vocabulary>) -> Result<Classifier> {
    config.validate()?;
    if config.architecture != Architecture::Encoder {
        return Err(Error::arg("build_classifier expects an encoder architecture"));
    }
    let dtype = config.precision.dtype();
    let mut store = ParamStore::new(dtype);
    let mut head_rng = ChaCha8Rng::seed_from_u64(config.init_seed ^ 0x68ea_d000);

    if config.is_desk() {
        let vocab = desk_vocab
            .ok_or_else(|| Error::arg("a desk encoder needs a vocabulary built from training text"))?
            .clone();
        let dims = EncoderDims {
            vocab_size: vocab.len(),
            max_positions: config.max_sequence_length,
            type_vocab_size: 2,
            hidden: config.hidden_size,
            heads: config.num_attention_heads,
            blocks: config.num_blocks,
            intermediate: config.intermediate(),
            hidden_dropout: config.head_dropout,
            head_dropout: config.head_dropout,
            layer_norm_eps: 1e-12,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let bert = BertClassifier::new(
            &mut store,
            &mut Source::Random(&mut rng),
            &mut Source::Random(&mut head_rng),
            dims,
        )?;
        return Ok(Classifier {
            config: config.clone(),
            tokenizer: WordPieceTokenizer::new(vocab, config.lowercase),
            store,
            net: Network::Encoder(bert),
        });
    }

    let unavailable = |reason: String| Error::CheckpointUnavailable {
        encoder_id: config.encoder_id.clone(),
        reason,
    };
    let dir = resolve_encoder_dir(&config.encoder_id).ok_or_else(|| {
        unavailable(format!(
            "no directory {:?} and nothing under ${CACHE_ENV}",
            config.encoder_id
        ))
    })?;
    let pretrained = PretrainedConfig::load(&dir.join("config.json")).map_err(|e| unavailable(e.to_string()))?;
    if (pretrained.num_hidden_layers, pretrained.num_attention_heads, pretrained.hidden_size)
        != (config.num_blocks, config.num_attention_heads, config.hidden_size)
    {
        return Err(Error::arg(format!(
            "model config ({} blocks, {} heads, hidden {}) disagrees with checkpoint ({}, {}, {})",
            config.num_blocks,
            config.num_attention_heads,
            config.hidden_size,
            pretrained.num_hidden_layers,
            pretrained.num_attention_heads,
            pretrained.hidden_size
        )));
    }
    let vocab = Vocabulary::load(&dir.join("vocab.txt")).map_err(|e| unavailable(e.to_string()))?;
    let mut weights = load_weights(&dir.join("model.safetensors")).map_err(|e| unavailable(e.to_string()))?;
    let dims = EncoderDims {
        vocab_size: pretrained.vocab_size,
        max_positions: pretrained.max_position_embeddings,
        type_vocab_size: pretrained.type_vocab_size,
        hidden: pretrained.hidden_size,
        heads: pretrained.num_attention_heads,
        blocks: pretrained.num_hidden_layers,
        intermediate: pretrained.intermediate_size,
        hidden_dropout: pretrained.hidden_dropout_prob,
        head_dropout: config.head_dropout,
        layer_norm_eps: pretrained.layer_norm_eps,
    };
    if vocab.len() != dims.vocab_size {
        return Err(unavailable(format!(
            "vocab.txt has {} entries but config.json declares {}",
            vocab.len(),
            dims.vocab_size
        )));
    }
    let mut head = split_head(&mut weights);
    let bert = if head.is_empty() {
        BertClassifier::new(
            &mut store,
            &mut Source::Loaded(&mut weights),
            &mut Source::Random(&mut head_rng),
            dims,
        )
    } else {
        BertClassifier::new(
            &mut store,
            &mut Source::Loaded(&mut weights),
            &mut Source::Loaded(&mut head),
            dims,
        )
    }
    .map_err(|e| match e {
        Error::CheckpointUnavailable { reason, .. } => unavailable(reason),
        other => other,
    })?;
    let lowercase = pretrained.do_lower_case.unwrap_or(config.lowercase);
    Ok(Classifier {
        config: config.clone(),
        tokenizer: WordPieceTokenizer::new(vocab, lowercase),
        store,
        net: Network::Encoder(bert),
    })
}

/// Builds an untrained bidirectional LSTM baseline over `vocab`.
pub fn build_baseline(config: &ModelConfig, vocab: &Vocabulary) -> Result<Classifier> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::arg("baseline vocabulary is empty"));
    }
    let mut store = ParamStore::new(config.precision.dtype());
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let dims = LstmDims {
        vocab_size: vocab.len(),
        embedding_dim: config.embedding_dim,
        hidden: config.lstm_hidden,
        head_dropout: config.head_dropout,
    };
    let lstm = BiLstmClassifier::new(&mut store, &mut Source::Random(&mut rng), dims)?;
    Ok(Classifier {
        config: ModelConfig {
            architecture: Architecture::BiLstm,
            ..config.clone()
        },
        tokenizer: WordPieceTokenizer::new(vocab.clone(), config.lowercase),
        store,
        net: Network::BiLstm(lstm),
    })
}

/// Builds whichever architecture `config` names. Desk encoders and baselines
/// use `vocab`; pretrained encoders bring their own.
pub fn build_model(config: &ModelConfig, vocab: &Vocabulary) -> Result<Classifier> {
    match config.architecture {
        Architecture::Encoder => build_classifier(config, Some(vocab)),
        Architecture::BiLstm => build_baseline(config, vocab),
    }
}

fn resolve_encoder_dir(encoder_id: &str) -> Option<PathBuf> {
    let literal = PathBuf::from(encoder_id);
    if literal.join("config.json").is_file() {
        return Some(literal);
    }
    let cache = std::env::var_os(CACHE_ENV)?;
    let dir = Path::new(&cache).join(encoder_id);
    dir.join("config.json").is_file().then_some(dir)
}

/// Reads safetensors weights, dropping a `bert.` prefix and mapping legacy
/// `gamma`/`beta` layer-norm names.
fn load_weights(path: &Path) -> Result<HashMap<String, Tensor>> {
    let raw = candle_core::safetensors::load(path, &Device::Cpu)?;
    Ok(raw
        .into_iter()
        .map(|(name, t)| {
            let name = name.strip_prefix("bert.").unwrap_or(&name).to_string();
            let name = if let Some(stem) = name.strip_suffix(".gamma") {
                format!("{stem}.weight")
            } else if let Some(stem) = name.strip_suffix(".beta") {
                format!("{stem}.bias")
            } else {
                name
            };
            (name, t)
        })
        .collect())
}

#[derive(Debug, Deserialize)]
struct PretrainedConfig {
    vocab_size: usize,
    hidden_size: usize,
    num_hidden_layers: usize,
    num_attention_heads: usize,
    intermediate_size: usize,
    max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    type_vocab_size: usize,
    #[serde(default = "default_ln_eps")]
    layer_norm_eps: f64,
    #[serde(default = "default_dropout")]
    hidden_dropout_prob: f64,
    #[serde(default)]
    do_lower_case: Option<bool>,
}

fn default_type_vocab() -> usize {
    2
}
fn default_ln_eps() -> f64 {
    1e-12
}
fn default_dropout() -> f64 {
    0.1
}

impl PretrainedConfig {
    fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl Classifier {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tokenizer(&self) -> &WordPieceTokenizer {
        &self.tokenizer
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn dtype(&self) -> DType {
        self.store.dtype()
    }

    pub fn parameter_count(&self) -> usize {
        self.store.parameter_count()
    }

    pub fn head_parameter_count(&self) -> usize {
        self.store.count_with_prefix("classifier.")
    }

    pub fn architecture(&self) -> Architecture {
        self.config.architecture
    }

    pub fn encode(&self, text: &str) -> Encoding {
        self.tokenizer.encode(text, self.config.max_sequence_length)
    }

    /// Pads encodings to the longest one with `[PAD]`.
    pub fn batch(&self, encodings: &[&Encoding]) -> Result<Batch> {
        let len = encodings.iter().map(|e| e.len()).max().unwrap_or(0);
        let pad = self.tokenizer.vocab().pad_id();
        let mut ids = Vec::with_capacity(encodings.len() * len);
        let mut mask = Vec::with_capacity(encodings.len() * len);
        for e in encodings {
            ids.extend(e.ids.iter().copied().chain(std::iter::repeat_n(pad, len - e.len())));
            mask.extend((0..len).map(|i| if i < e.len() { 1.0 } else { 0.0 }));
        }
        let dev = self.store.device();
        Ok(Batch {
            ids: Tensor::from_vec(ids, (encodings.len(), len), dev)?,
            mask: Tensor::from_vec(mask, (encodings.len(), len), dev)?.to_dtype(self.dtype())?,
            lengths: encodings.iter().map(|e| e.len()).collect(),
        })
    }

    /// Word embeddings `[batch, len, dim]` of the batch's token ids.
    pub fn embed(&self, ids: &Tensor) -> Result<Tensor> {
        match &self.net {
            Network::Encoder(b) => b.embed_words(ids),
            Network::BiLstm(l) => l.embed_words(ids),
        }
    }

    /// Embedding row of `[PAD]`.
    pub fn pad_embedding(&self) -> Result<Tensor> {
        let pad = self.tokenizer.vocab().pad_id();
        match &self.net {
            Network::Encoder(b) => b.word_embeddings.row(pad),
            Network::BiLstm(l) => l.embeddings.row(pad),
        }
    }

    pub fn logits_from_embeddings(
        &self,
        words: &Tensor,
        mask: &Tensor,
        mode: &mut ForwardMode<'_>,
    ) -> Result<Tensor> {
        match &self.net {
            Network::Encoder(b) => b.logits_from_embeddings(words, mask, mode),
            Network::BiLstm(l) => l.logits_from_embeddings(words, mask, mode),
        }
    }

    pub fn logits(&self, batch: &Batch, mode: &mut ForwardMode<'_>) -> Result<Tensor> {
        let words = self.embed(&batch.ids)?;
        self.logits_from_embeddings(&words, &batch.mask, mode)
    }

    /// Targets tensor (1.0 = OFFENSIVE) in the model dtype.
    pub fn targets(&self, examples: &[&LabeledExample]) -> Result<Tensor> {
        let y: Vec<f64> = examples
            .iter()
            .map(|e| if e.label.is_offensive() { 1.0 } else { 0.0 })
            .collect();
        Ok(Tensor::from_vec(y, examples.len(), self.store.device())?.to_dtype(self.dtype())?)
    }

    /// Mean binary cross entropy over `examples` with dropout disabled.
    pub fn loss(&self, examples: &[LabeledExample]) -> Result<Tensor> {
        let encodings: Vec<Encoding> = examples.iter().map(|e| self.encode(&e.text)).collect();
        let refs: Vec<&Encoding> = encodings.iter().collect();
        let batch = self.batch(&refs)?;
        let logits = self.logits(&batch, &mut ForwardMode::eval())?;
        let exs: Vec<&LabeledExample> = examples.iter().collect();
        bce_with_logits(&logits, &self.targets(&exs)?)
    }

    pub fn encoder_dims(&self) -> Option<EncoderDims> {
        match &self.net {
            Network::Encoder(b) => Some(*b.dims()),
            Network::BiLstm(_) => None,
        }
    }

    /// Reassembles a classifier from saved weights.
    pub(crate) fn from_parts(
        config: ModelConfig,
        tokenizer: WordPieceTokenizer,
        mut weights: HashMap<String, Tensor>,
        encoder_dims: Option<EncoderDims>,
    ) -> Result<Self> {
        let mut store = ParamStore::new(config.precision.dtype());
        let net = match config.architecture {
            Architecture::Encoder => {
                let dims = encoder_dims
                    .ok_or_else(|| Error::arg("encoder checkpoint lacks encoder dimensions"))?;
                let mut head = split_head(&mut weights);
                Network::Encoder(BertClassifier::new(
                    &mut store,
                    &mut Source::Loaded(&mut weights),
                    &mut Source::Loaded(&mut head),
                    dims,
                )?)
            }
            Architecture::BiLstm => {
                let dims = LstmDims {
                    vocab_size: tokenizer.vocab().len(),
                    embedding_dim: config.embedding_dim,
                    hidden: config.lstm_hidden,
                    head_dropout: config.head_dropout,
                };
                Network::BiLstm(BiLstmClassifier::new(
                    &mut store,
                    &mut Source::Loaded(&mut weights),
                    dims,
                )?)
            }
        };
        Ok(Self {
            config,
            tokenizer,
            store,
            net,
        })
    }
}

/// Moves `classifier.*` tensors out of `weights`.
fn split_head(weights: &mut HashMap<String, Tensor>) -> HashMap<String, Tensor> {
    let names: Vec<String> = weights
        .keys()
        .filter(|k| k.starts_with("classifier."))
        .cloned()
        .collect();
    names
        .into_iter()
        .filter_map(|k| weights.remove(&k).map(|t| (k, t)))
        .collect()
}
