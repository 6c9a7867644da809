//! Generated desk-scale languages.
//!
//! A synthetic language has its own neutral vocabulary and an offensive
//! lexicon. A sentence is offensive exactly when it contains a lexicon word.
//! Lexicons are disjoint across languages unless two languages name the same
//! `lexicon_group`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusCatalog, Label, LabeledExample, Language, LanguageCorpus, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticLanguageSpec {
    pub index: u8,
    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
    pub neutral_vocab: usize,
    pub lexicon_size: usize,
    /// Lexicon shared with other languages naming the same group; defaults to
    /// the language's own index.
    pub lexicon_group: Option<u8>,
    pub min_len: usize,
    pub max_len: usize,
    pub offensive_share: f64,
}

impl SyntheticLanguageSpec {
    pub fn new(index: u8) -> Self {
        Self {
            index,
            ..Self::default()
        }
    }

    pub fn language(&self) -> Language {
        Language::Synthetic(self.index)
    }

    fn letter(i: u8) -> char {
        char::from(b'a' + i % 26)
    }

    pub fn neutral_words(&self) -> Vec<String> {
        let l = Self::letter(self.index);
        (0..self.neutral_vocab).map(|k| format!("{l}w{k}")).collect()
    }

    pub fn lexicon(&self) -> Vec<String> {
        let l = Self::letter(self.lexicon_group.unwrap_or(self.index));
        (0..self.lexicon_size).map(|k| format!("{l}x{k}")).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.neutral_vocab == 0 || self.lexicon_size == 0 {
            return Err(Error::arg("synthetic vocabularies must be non-empty"));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::arg("synthetic sentence lengths need 1 <= min_len <= max_len"));
        }
        if !(0.0..=1.0).contains(&self.offensive_share) {
            return Err(Error::arg("offensive_share must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn generate(&self, seed: u64) -> Result<LanguageCorpus> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(self.index) << 32));
        let neutral = self.neutral_words();
        let lexicon = self.lexicon();
        let lang = self.language();
        let mut make = |split: Split, n: usize| -> Vec<LabeledExample> {
            let n_off = (self.offensive_share * n as f64).round() as usize;
            let mut labels: Vec<bool> = (0..n).map(|i| i < n_off).collect();
            labels.shuffle(&mut rng);
            labels
                .into_iter()
                .enumerate()
                .map(|(i, offensive)| {
                    let len = rng.random_range(self.min_len..=self.max_len);
                    let mut words: Vec<&str> = (0..len)
                        .map(|_| neutral[rng.random_range(0..neutral.len())].as_str())
                        .collect();
                    if offensive {
                        let pos = rng.random_range(0..len);
                        words[pos] = &lexicon[rng.random_range(0..lexicon.len())];
                    }
                    LabeledExample::new(
                        format!("{}-{split}-{i}", lang.file_stem()),
                        words.join(" "),
                        Label::from_offensive(offensive),
                        lang,
                    )
                })
                .collect()
        };
        let train = make(Split::Train, self.train_size);
        let dev = make(Split::Dev, self.dev_size);
        let test = make(Split::Test, self.test_size);
        LanguageCorpus::new(lang, train, dev, test)
    }
}

impl Default for SyntheticLanguageSpec {
    fn default() -> Self {
        Self {
            index: 0,
            train_size: 128,
            dev_size: 32,
            test_size: 64,
            neutral_vocab: 24,
            lexicon_size: 4,
            lexicon_group: None,
            min_len: 3,
            max_len: 6,
            offensive_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCatalogSpec {
    pub languages: Vec<SyntheticLanguageSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticCatalogSpec {
    /// `n` languages with default sizes and disjoint lexicons.
    pub fn disjoint(n: u8, seed: u64) -> Self {
        Self {
            languages: (0..n).map(SyntheticLanguageSpec::new).collect(),
            seed,
        }
    }

    pub fn generate(&self) -> Result<CorpusCatalog> {
        let corpora = self
            .languages
            .iter()
            .map(|l| l.generate(self.seed))
            .collect::<Result<Vec<_>>>()?;
        CorpusCatalog::from_corpora(corpora)
    }
}
