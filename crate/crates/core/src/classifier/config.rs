use candle_core::DType;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `encoder_id` that requests a randomly initialized encoder instead of a
/// pretrained checkpoint.
pub const DESK_ENCODER_ID: &str = "desk-random";

/// Environment variable naming the directory that holds pretrained encoder
/// checkpoints (`<cache>/<encoder_id>/{config.json,vocab.txt,model.safetensors}`).
pub const CACHE_ENV: &str = "XLOD_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Transformer encoder, first-position pooler, linear head.
    #[default]
    Encoder,
    /// Bidirectional LSTM over learned embeddings; the recurrent baseline.
    BiLstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder_id: String,
    pub architecture: Architecture,
    pub num_blocks: usize,
    pub num_attention_heads: usize,
    pub hidden_size: usize,
    /// Feed-forward width; `None` means 4 x hidden_size.
    pub intermediate_size: Option<usize>,
    pub head_dropout: f64,
    pub max_sequence_length: usize,
    /// Baseline embedding width.
    pub embedding_dim: usize,
    /// Baseline per-direction LSTM width.
    pub lstm_hidden: usize,
    /// Minimum corpus frequency for a word to enter a desk vocabulary.
    pub vocab_min_count: usize,
    pub lowercase: bool,
    pub precision: Precision,
    /// Seed for random initialization of desk encoders and new heads.
    pub init_seed: u64,
}

/// Size of the published multilingual base vocabulary.
pub const REFERENCE_VOCAB_SIZE: usize = 119_547;
const TYPE_VOCAB_SIZE: usize = 2;

impl Default for ModelConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelConfig {
    /// The multilingual base checkpoint: 12 blocks, 12 heads, hidden 768.
    pub fn reference() -> Self {
        Self {
            encoder_id: "bert-base-multilingual-cased".into(),
            architecture: Architecture::Encoder,
            num_blocks: 12,
            num_attention_heads: 12,
            hidden_size: 768,
            intermediate_size: None,
            head_dropout: 0.1,
            max_sequence_length: 128,
            embedding_dim: 100,
            lstm_hidden: 128,
            vocab_min_count: 1,
            lowercase: false,
            precision: Precision::F32,
            init_seed: 0,
        }
    }

    /// Randomly initialized 2-block, 2-head, hidden-32 encoder in f64.
    pub fn desk() -> Self {
        Self {
            encoder_id: DESK_ENCODER_ID.into(),
            num_blocks: 2,
            num_attention_heads: 2,
            hidden_size: 32,
            intermediate_size: Some(64),
            max_sequence_length: 32,
            precision: Precision::F64,
            ..Self::reference()
        }
    }

    /// Desk-scale recurrent baseline.
    pub fn desk_baseline() -> Self {
        Self {
            architecture: Architecture::BiLstm,
            embedding_dim: 16,
            lstm_hidden: 16,
            ..Self::desk()
        }
    }

    pub fn is_desk(&self) -> bool {
        self.encoder_id == DESK_ENCODER_ID
    }

    pub fn intermediate(&self) -> usize {
        self.intermediate_size.unwrap_or(4 * self.hidden_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sequence_length < 2 {
            return Err(Error::arg("max_sequence_length must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.head_dropout) {
            return Err(Error::arg("head_dropout must lie in [0, 1)"));
        }
        match self.architecture {
            Architecture::Encoder => {
                if self.num_blocks == 0 || self.num_attention_heads == 0 || self.hidden_size == 0 {
                    return Err(Error::arg("encoder dimensions must be positive"));
                }
                if self.hidden_size % self.num_attention_heads != 0 {
                    return Err(Error::arg(format!(
                        "hidden_size {} is not divisible by num_attention_heads {}",
                        self.hidden_size, self.num_attention_heads
                    )));
                }
                if self.intermediate() == 0 {
                    return Err(Error::arg("intermediate_size must be positive"));
                }
            }
            Architecture::BiLstm => {
                if self.embedding_dim == 0 || self.lstm_hidden == 0 {
                    return Err(Error::arg("baseline dimensions must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Parameters in the encoder with pooler, excluding the classification
    /// head, for a vocabulary of `vocab_size` and `max_positions` positions.
    pub fn encoder_parameter_count(&self, vocab_size: usize, max_positions: usize) -> usize {
        let h = self.hidden_size;
        let i = self.intermediate();
        let embeddings = (vocab_size + max_positions + TYPE_VOCAB_SIZE) * h + 2 * h;
        let attention = 4 * (h * h + h) + 2 * h;
        let feed_forward = (h * i + i) + (i * h + h) + 2 * h;
        let pooler = h * h + h;
        embeddings + self.num_blocks * (attention + feed_forward) + pooler
    }

    /// Head parameters: one weight per pooled feature plus a bias.
    pub fn head_parameter_count(&self) -> usize {
        match self.architecture {
            Architecture::Encoder => self.hidden_size + 1,
            Architecture::BiLstm => 2 * self.lstm_hidden + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    BinaryCrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_learning_rate: f64,
    pub warmup_fraction: f64,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub decision_threshold: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            peak_learning_rate: 5e-5,
            warmup_fraction: 0.1,
            loss: LossKind::BinaryCrossEntropy,
            optimizer: OptimizerKind::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            weight_decay: 0.0,
            seed: 0,
            decision_threshold: 0.5,
        }
    }
}

impl TrainingConfig {
    /// Recipe for randomly initialized desk encoders, which need a far larger
    /// step size than fine-tuning a pretrained checkpoint.
    pub fn desk() -> Self {
        Self {
            epochs: 30,
            batch_size: 8,
            peak_learning_rate: 3e-3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::arg("epochs and batch_size must be at least 1"));
        }
        if !(self.peak_learning_rate > 0.0 && self.peak_learning_rate.is_finite()) {
            return Err(Error::arg("peak_learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::arg("warmup_fraction must lie in [0, 1)"));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::arg("decision_threshold must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::arg("adam betas must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self, train_len: usize) -> usize {
        train_len.div_ceil(self.batch_size)
    }

    pub fn total_steps(&self, train_len: usize) -> usize {
        self.epochs * self.steps_per_epoch(train_len)
    }
}
