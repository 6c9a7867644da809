//! Encoder-plus-head classifier, the recurrent baseline, and the fine-tuning
//! loop (Adam, linear warmup then linear decay, binary cross entropy).

mod bert;
mod config;
pub mod layers;
mod lstm;
mod model;
mod schedule;
mod train;

pub use bert::EncoderDims;
pub use config::{
    Architecture, LossKind, ModelConfig, OptimizerKind, Precision, TrainingConfig, CACHE_ENV,
    DESK_ENCODER_ID, REFERENCE_VOCAB_SIZE,
};
pub use model::{build_baseline, build_classifier, build_model, Batch, Classifier};
pub use schedule::{lr_at_step, warmup_steps};
pub use train::{fine_tune, predict_proba, Checkpoint, EpochMetric, PredictionBatch};
