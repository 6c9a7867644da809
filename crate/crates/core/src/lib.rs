//! Cross-lingual offensive language detection harness.
//!
//! One multilingual encoder classifier is fine-tuned over several tweet
//! corpora and evaluated under monolingual, joint, zero-shot, few-shot and
//! augmentation setups. Integrated Gradients explains individual
//! predictions. Every experiment also runs at desk scale on generated
//! languages with a small randomly initialized encoder.

pub mod attribution;
pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod protocols;
pub mod report;
pub mod tokenizer;

pub use error::{Error, Result};
