use std::collections::BTreeSet;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{ModelConfig, TrainingConfig};
use crate::corpus::synthetic::SyntheticCatalogSpec;
use crate::corpus::{load_corpus, CorpusCatalog, CorpusFormat, Language};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Monolingual,
    JointAll,
    ZeroShotMatrix,
    FewShotCurve,
    Augmentation,
}

/// Where the corpora come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// OLID-style TSV directories under `root`, one per language.
    Olid {
        root: PathBuf,
        languages: Vec<Language>,
        #[serde(default)]
        format: CorpusFormat,
    },
    /// Generated desk-scale languages.
    Synthetic(SyntheticCatalogSpec),
}

impl DataSource {
    pub fn languages(&self) -> BTreeSet<Language> {
        match self {
            DataSource::Olid { languages, .. } => languages.iter().copied().collect(),
            DataSource::Synthetic(s) => s.languages.iter().map(|l| l.language()).collect(),
        }
    }

    /// Loads every language; OLID languages are read in parallel.
    pub fn load(&self) -> Result<CorpusCatalog> {
        match self {
            DataSource::Olid {
                root,
                languages,
                format,
            } => {
                let corpora = languages
                    .par_iter()
                    .map(|&l| load_corpus(root, l, *format))
                    .collect::<Result<Vec<_>>>()?;
                CorpusCatalog::from_corpora(corpora)
            }
            DataSource::Synthetic(spec) => spec.generate(),
        }
    }
}

/// Default few-shot grid: 0.05, 0.10, ..., 1.00.
pub fn default_fractions() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

/// A declarative experiment. Unset language sets default to every data
/// language (tests default to the training languages); few-shot fractions
/// default to [`default_fractions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub data: DataSource,
    #[serde(default)]
    pub train_languages: BTreeSet<Language>,
    #[serde(default)]
    pub test_languages: BTreeSet<Language>,
    #[serde(default)]
    pub fractions: Option<Vec<f64>>,
    /// Base language of few-shot and augmentation runs.
    #[serde(default)]
    pub augment_base: Option<Language>,
    /// Helper language: required for augmentation, optional for few-shot.
    #[serde(default)]
    pub augment_with: Option<Language>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub save_checkpoints: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_true() -> bool {
    true
}

fn invariant(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, data: DataSource, model: ModelConfig, training: TrainingConfig) -> Self {
        Self {
            kind,
            data,
            train_languages: BTreeSet::new(),
            test_languages: BTreeSet::new(),
            fractions: None,
            augment_base: None,
            augment_with: None,
            model,
            training,
            output_dir: default_output_dir(),
            save_checkpoints: true,
        }
    }

    /// Fills kind-dependent defaults. Idempotent.
    pub fn fill_defaults(&mut self) {
        if self.train_languages.is_empty() {
            self.train_languages = match (self.kind, self.augment_base) {
                (ExperimentKind::FewShotCurve | ExperimentKind::Augmentation, Some(base)) => {
                    std::iter::once(base).chain(self.augment_with).collect()
                }
                _ => self.data.languages(),
            };
        }
        if self.test_languages.is_empty() {
            self.test_languages = match (self.kind, self.augment_base) {
                (ExperimentKind::FewShotCurve | ExperimentKind::Augmentation, Some(base)) => {
                    std::iter::once(base).collect()
                }
                _ => self.train_languages.clone(),
            };
        }
        if self.kind == ExperimentKind::FewShotCurve && self.fractions.is_none() {
            self.fractions = Some(default_fractions());
        }
    }

    /// Checks the kind/field invariants and nested configs.
    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .map_err(|e| invariant("model", e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| invariant("training", e.to_string()))?;
        let available = self.data.languages();
        if available.is_empty() {
            return Err(invariant("data", "no languages"));
        }
        for (key, set) in [
            ("train_languages", &self.train_languages),
            ("test_languages", &self.test_languages),
        ] {
            if let Some(missing) = set.iter().find(|l| !available.contains(l)) {
                return Err(invariant(key, format!("{missing} is not in the data source")));
            }
        }
        for (key, lang) in [("augment_base", self.augment_base), ("augment_with", self.augment_with)] {
            if let Some(l) = lang.filter(|l| !available.contains(l)) {
                return Err(invariant(key, format!("{l} is not in the data source")));
            }
        }

        let few_shot = self.kind == ExperimentKind::FewShotCurve;
        match (&self.fractions, few_shot) {
            (Some(_), false) => {
                return Err(invariant("fractions", "only valid for few_shot_curve experiments"))
            }
            (None, true) => return Err(invariant("fractions", "required for few_shot_curve")),
            (Some(f), true) => {
                if f.is_empty() {
                    return Err(invariant("fractions", "must not be empty"));
                }
                if f.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                    return Err(invariant("fractions", "every fraction must lie in (0, 1]"));
                }
                if f.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invariant("fractions", "must be strictly increasing"));
                }
            }
            (None, false) => {}
        }

        match self.kind {
            ExperimentKind::Monolingual => {
                self.forbid_augment_fields()?;
                if self.train_languages.is_empty() {
                    return Err(invariant("train_languages", "monolingual runs need a language"));
                }
                if self.test_languages != self.train_languages {
                    return Err(invariant(
                        "test_languages",
                        "monolingual runs test on their training languages",
                    ));
                }
            }
            ExperimentKind::JointAll | ExperimentKind::ZeroShotMatrix => {
                self.forbid_augment_fields()?;
                if self.train_languages.len() < 2 {
                    return Err(invariant("train_languages", "needs at least two languages"));
                }
                if self.kind == ExperimentKind::ZeroShotMatrix
                    && self.test_languages != self.train_languages
                {
                    return Err(invariant(
                        "test_languages",
                        "the zero-shot grid tests on exactly its training languages",
                    ));
                }
            }
            ExperimentKind::FewShotCurve | ExperimentKind::Augmentation => {
                let base = self
                    .augment_base
                    .ok_or_else(|| invariant("augment_base", "required for this kind"))?;
                match self.augment_with {
                    None if self.kind == ExperimentKind::Augmentation => {
                        return Err(invariant("augment_with", "required for augmentation"))
                    }
                    Some(h) if h == base => {
                        return Err(invariant("augment_with", "helper must differ from base"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn forbid_augment_fields(&self) -> Result<()> {
        if self.augment_base.is_some() {
            return Err(invariant("augment_base", "only valid for few-shot and augmentation"));
        }
        if self.augment_with.is_some() {
            return Err(invariant("augment_with", "only valid for few-shot and augmentation"));
        }
        Ok(())
    }

    /// Content hash of everything that determines results except the seeds
    /// and the output location. Stable under key reordering of the source
    /// document because it hashes the canonical (key-sorted) JSON form.
    pub fn spec_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("spec serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("save_checkpoints");
            if let Some(t) = obj.get_mut("training").and_then(|t| t.as_object_mut()) {
                t.remove("seed");
            }
            if let Some(m) = obj.get_mut("model").and_then(|m| m.as_object_mut()) {
                m.remove("init_seed");
            }
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..6])
    }

    pub fn seed(&self) -> u64 {
        self.training.seed
    }

    /// Sets both the training and initialization seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.training.seed = seed;
        self.model.init_seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::SyntheticCatalogSpec;

    fn spec(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(
            kind,
            DataSource::Synthetic(SyntheticCatalogSpec::disjoint(2, 0)),
            ModelConfig::desk(),
            TrainingConfig::desk(),
        );
        if matches!(kind, ExperimentKind::FewShotCurve | ExperimentKind::Augmentation) {
            s.augment_base = Some(Language::Synthetic(0));
            if kind == ExperimentKind::Augmentation {
                s.augment_with = Some(Language::Synthetic(1));
            }
        }
        s.fill_defaults();
        s
    }

    #[test]
    fn defaults_fill_per_kind() {
        let s = spec(ExperimentKind::FewShotCurve);
        assert_eq!(s.fractions.as_ref().unwrap().len(), 20);
        assert_eq!(s.test_languages, BTreeSet::from([Language::Synthetic(0)]));
        s.validate().unwrap();
        let m = spec(ExperimentKind::ZeroShotMatrix);
        assert_eq!(m.train_languages.len(), 2);
        m.validate().unwrap();
    }

    #[test]
    fn kind_field_conflicts_are_rejected() {
        let mut s = spec(ExperimentKind::Monolingual);
        s.fractions = Some(vec![0.5]);
        assert!(matches!(s.validate(), Err(Error::Config { ref key, .. }) if key == "fractions"));

        let mut s = spec(ExperimentKind::FewShotCurve);
        s.fractions = Some(vec![0.5, 0.5]);
        assert!(s.validate().is_err());
        s.fractions = Some(vec![0.0, 0.5]);
        assert!(s.validate().is_err());

        let mut s = spec(ExperimentKind::Augmentation);
        s.augment_with = s.augment_base;
        assert!(matches!(s.validate(), Err(Error::Config { ref key, .. }) if key == "augment_with"));

        let mut s = spec(ExperimentKind::JointAll);
        s.train_languages = BTreeSet::from([Language::Synthetic(0)]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn hash_ignores_seed_and_output() {
        let a = spec(ExperimentKind::JointAll);
        let mut b = a.clone().with_seed(99);
        b.output_dir = "elsewhere".into();
        assert_eq!(a.spec_hash(), b.spec_hash());
        let mut c = a.clone();
        c.training.epochs += 1;
        assert_ne!(a.spec_hash(), c.spec_hash());
    }
}
