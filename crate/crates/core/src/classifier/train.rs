use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bert::EncoderDims;
use super::config::{ModelConfig, TrainingConfig};
use super::layers::{bce_with_logits, sigmoid, ForwardMode};
use super::model::Classifier;
use super::schedule::lr_at_step;
use crate::corpus::{data_hash, Label, LabeledExample, Language};
use crate::error::{Error, Result};
use crate::metrics::macro_f1;
use crate::tokenizer::{Encoding, Vocabulary, WordPieceTokenizer};

const INFERENCE_BATCH: usize = 64;
const WEIGHTS_FILE: &str = "model.safetensors";
const VOCAB_FILE: &str = "vocab.txt";
const SIDECAR_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetric {
    pub epoch: usize,
    pub dev_macro_f1: f64,
}

/// Trained weights plus everything needed to audit how they were produced.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub classifier: Classifier,
    pub training_config: TrainingConfig,
    pub training_languages: BTreeSet<Language>,
    pub per_epoch_dev_metrics: Vec<EpochMetric>,
    /// Example-weighted mean training loss of each epoch.
    pub per_epoch_train_loss: Vec<f64>,
    pub data_hash: String,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    model_config: ModelConfig,
    training_config: TrainingConfig,
    training_languages: BTreeSet<Language>,
    per_epoch_dev_metrics: Vec<EpochMetric>,
    per_epoch_train_loss: Vec<f64>,
    data_hash: String,
    steps: usize,
    lowercase: bool,
    encoder_dims: Option<EncoderDims>,
}

/// Probabilities of OFFENSIVE and the thresholded labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBatch {
    pub ids: Vec<String>,
    pub probabilities: Vec<f64>,
    pub labels: Vec<Label>,
    pub threshold: f64,
}

impl PredictionBatch {
    pub fn new(ids: Vec<String>, probabilities: Vec<f64>, threshold: f64) -> Self {
        let labels = probabilities
            .iter()
            .map(|&p| Label::from_offensive(p > threshold))
            .collect();
        Self {
            ids,
            probabilities,
            labels,
            threshold,
        }
    }

    pub fn with_threshold(&self, threshold: f64) -> Self {
        Self::new(self.ids.clone(), self.probabilities.clone(), threshold)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Fine-tunes `handle` on `train` with Adam and the warmup/decay schedule.
///
/// Takes `epochs * ceil(|train| / batch_size)` optimizer steps, reshuffling
/// the training set every epoch from the seed, and keeps the final weights.
/// Dev macro-F1 is recorded after each epoch when `dev` is given.
pub fn fine_tune(
    handle: Classifier,
    train: &[LabeledExample],
    dev: Option<&[LabeledExample]>,
    config: &TrainingConfig,
) -> Result<Checkpoint> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::arg("training set is empty"));
    }
    let encodings: Vec<Encoding> = train.iter().map(|e| handle.encode(&e.text)).collect();
    let steps_per_epoch = config.steps_per_epoch(train.len());
    let total_steps = config.total_steps(train.len());

    let mut optimizer = AdamW::new(
        handle.params().vars(),
        ParamsAdamW {
            lr: 0.0,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_epsilon,
            weight_decay: config.weight_decay,
        },
    )?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xd0_0d);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0;
    let mut dev_metrics = Vec::new();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let encs: Vec<&Encoding> = chunk.iter().map(|&i| &encodings[i]).collect();
            let exs: Vec<&LabeledExample> = chunk.iter().map(|&i| &train[i]).collect();
            let batch = handle.batch(&encs)?;
            let logits = handle.logits(&batch, &mut ForwardMode::train(&mut dropout_rng))?;
            let loss = bce_with_logits(&logits, &handle.targets(&exs)?)?;
            let value = loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            if !value.is_finite() {
                return Err(Error::Divergence { step });
            }
            loss_sum += value * chunk.len() as f64;
            optimizer.set_learning_rate(lr_at_step(step, total_steps, config)?);
            optimizer.backward_step(&loss)?;
            step += 1;
        }
        debug_assert_eq!(step, (epoch + 1) * steps_per_epoch);
        epoch_losses.push(loss_sum / train.len() as f64);
        if let Some(dev) = dev.filter(|d| !d.is_empty()) {
            let preds = score(&handle, dev, config.decision_threshold)?;
            let gold: Vec<Label> = dev.iter().map(|e| e.label).collect();
            dev_metrics.push(EpochMetric {
                epoch: epoch + 1,
                dev_macro_f1: macro_f1(&gold, &preds.labels)?.macro_f1,
            });
        }
        log::debug!(
            "epoch {}/{} loss {:.5}",
            epoch + 1,
            config.epochs,
            epoch_losses[epoch]
        );
    }

    Ok(Checkpoint {
        classifier: handle,
        training_config: config.clone(),
        training_languages: train.iter().map(|e| e.language).collect(),
        per_epoch_dev_metrics: dev_metrics,
        per_epoch_train_loss: epoch_losses,
        data_hash: data_hash(train),
        steps: step,
    })
}

fn score(classifier: &Classifier, examples: &[LabeledExample], threshold: f64) -> Result<PredictionBatch> {
    if examples.is_empty() {
        return Err(Error::arg("nothing to predict"));
    }
    let mut probabilities = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(INFERENCE_BATCH) {
        let encs: Vec<Encoding> = chunk.iter().map(|e| classifier.encode(&e.text)).collect();
        let refs: Vec<&Encoding> = encs.iter().collect();
        let batch = classifier.batch(&refs)?;
        let logits = classifier.logits(&batch, &mut ForwardMode::eval())?;
        let probs = sigmoid(&logits)?.to_dtype(candle_core::DType::F64)?;
        probabilities.extend(probs.to_vec1::<f64>()?);
    }
    let ids = examples.iter().map(|e| e.id.clone()).collect();
    Ok(PredictionBatch::new(ids, probabilities, threshold))
}

/// Scores `examples` with dropout disabled; labels use the checkpoint's
/// decision threshold.
pub fn predict_proba(checkpoint: &Checkpoint, examples: &[LabeledExample]) -> Result<PredictionBatch> {
    score(
        &checkpoint.classifier,
        examples,
        checkpoint.training_config.decision_threshold,
    )
}

impl Checkpoint {
    pub fn model_config(&self) -> &ModelConfig {
        self.classifier.config()
    }

    fn sidecar(&self) -> Sidecar {
        Sidecar {
            model_config: self.classifier.config().clone(),
            training_config: self.training_config.clone(),
            training_languages: self.training_languages.clone(),
            per_epoch_dev_metrics: self.per_epoch_dev_metrics.clone(),
            per_epoch_train_loss: self.per_epoch_train_loss.clone(),
            data_hash: self.data_hash.clone(),
            steps: self.steps,
            lowercase: self.classifier.tokenizer().lowercase(),
            encoder_dims: self.classifier.encoder_dims(),
        }
    }

    /// Writes `model.safetensors`, `vocab.txt` and the `checkpoint.json`
    /// sidecar into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        candle_core::safetensors::save(&self.classifier.params().tensors(), dir.join(WEIGHTS_FILE))?;
        self.classifier.tokenizer().vocab().save(&dir.join(VOCAB_FILE))?;
        fs::write(
            dir.join(SIDECAR_FILE),
            serde_json::to_string_pretty(&self.sidecar())?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let sidecar_path = dir.join(SIDECAR_FILE);
        let text = fs::read_to_string(&sidecar_path).map_err(|e| Error::CheckpointUnavailable {
            encoder_id: dir.display().to_string(),
            reason: e.to_string(),
        })?;
        let meta: Sidecar = serde_json::from_str(&text)?;
        let vocab = Vocabulary::load(&dir.join(VOCAB_FILE))?;
        let weights: HashMap<_, _> =
            candle_core::safetensors::load(dir.join(WEIGHTS_FILE), &candle_core::Device::Cpu)?;
        let classifier = Classifier::from_parts(
            meta.model_config,
            WordPieceTokenizer::new(vocab, meta.lowercase),
            weights,
            meta.encoder_dims,
        )?;
        Ok(Self {
            classifier,
            training_config: meta.training_config,
            training_languages: meta.training_languages,
            per_epoch_dev_metrics: meta.per_epoch_dev_metrics,
            per_epoch_train_loss: meta.per_epoch_train_loss,
            data_hash: meta.data_hash,
            steps: meta.steps,
        })
    }
}
