//! Tweet corpora: the labeled example unit, per-language train/dev/test
//! triples, and the catalog that holds one corpus per language.

mod loader;
mod normalize;
mod sampling;
mod summary;
pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use loader::{load_corpus, load_split, CorpusFormat};
pub use normalize::normalize_text;
pub use sampling::{concatenate_corpora, fraction_size, slice_fraction};
pub use summary::{corpus_summary, summary_markdown, SplitBalance, SummaryRow};

/// Binary offensiveness label. Serialized with the OLID vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "OFF")]
    Offensive,
    #[serde(rename = "NOT")]
    NotOffensive,
}

impl Label {
    pub fn is_offensive(self) -> bool {
        matches!(self, Label::Offensive)
    }

    pub fn from_offensive(offensive: bool) -> Self {
        if offensive {
            Label::Offensive
        } else {
            Label::NotOffensive
        }
    }

    pub fn flip(self) -> Self {
        Self::from_offensive(!self.is_offensive())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Offensive => "OFF",
            Label::NotOffensive => "NOT",
        }
    }

    /// Parses the OLID label vocabulary. Returns `None` for anything else.
    pub fn parse_olid(token: &str) -> Option<Self> {
        match token.trim() {
            "OFF" => Some(Label::Offensive),
            "NOT" => Some(Label::NotOffensive),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Language tag. Derived ordering is the fixed catalog order
/// EN, DA, EL, AR, TR, then synthetic languages by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Language {
    En,
    Da,
    El,
    Ar,
    Tr,
    Synthetic(u8),
}

impl Language {
    pub const SHARED_TASK: [Language; 5] = [
        Language::En,
        Language::Da,
        Language::El,
        Language::Ar,
        Language::Tr,
    ];

    pub fn code(self) -> String {
        match self {
            Language::En => "EN".into(),
            Language::Da => "DA".into(),
            Language::El => "EL".into(),
            Language::Ar => "AR".into(),
            Language::Tr => "TR".into(),
            Language::Synthetic(i) => format!("SYNTHETIC_{}", synthetic_suffix(i)),
        }
    }

    /// English name used in report row labels.
    pub fn display_name(self) -> String {
        match self {
            Language::En => "English".into(),
            Language::Da => "Danish".into(),
            Language::El => "Greek".into(),
            Language::Ar => "Arabic".into(),
            Language::Tr => "Turkish".into(),
            Language::Synthetic(i) => format!("Synthetic {}", synthetic_suffix(i)),
        }
    }

    /// Lowercase ISO-style code used for data file names (`en`, `da`, ...).
    pub fn file_stem(self) -> String {
        self.code().to_lowercase()
    }
}

fn synthetic_suffix(i: u8) -> String {
    if i < 26 {
        char::from(b'A' + i).to_string()
    } else {
        i.to_string()
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_uppercase();
        let lang = match upper.as_str() {
            "EN" | "ENGLISH" => Language::En,
            "DA" | "DANISH" => Language::Da,
            "EL" | "GR" | "GREEK" => Language::El,
            "AR" | "ARABIC" => Language::Ar,
            "TR" | "TURKISH" => Language::Tr,
            other => {
                let suffix = other
                    .strip_prefix("SYNTHETIC_")
                    .ok_or_else(|| Error::arg(format!("unknown language {s:?}")))?;
                let index = match suffix.as_bytes() {
                    [c] if c.is_ascii_uppercase() => c - b'A',
                    _ => suffix
                        .parse::<u8>()
                        .map_err(|_| Error::arg(format!("unknown language {s:?}")))?,
                };
                Language::Synthetic(index)
            }
        };
        Ok(lang)
    }
}

impl TryFrom<String> for Language {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<Language> for String {
    fn from(lang: Language) -> Self {
        lang.code()
    }
}

/// One tweet with its binary label and language tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub language: Language,
}

impl LabeledExample {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        label: Label,
        language: Language,
    ) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
            language,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Train/dev/test triple for one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageCorpus {
    pub language: Language,
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl LanguageCorpus {
    /// Builds a corpus, checking id uniqueness within and across splits and
    /// non-empty texts. Class coverage is checked by [`Self::validate_balance`].
    pub fn new(
        language: Language,
        train: Vec<LabeledExample>,
        dev: Vec<LabeledExample>,
        test: Vec<LabeledExample>,
    ) -> Result<Self> {
        let corpus = Self {
            language,
            train,
            dev,
            test,
        };
        corpus.validate_ids()?;
        Ok(corpus)
    }

    pub fn split(&self, split: Split) -> &[LabeledExample] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    fn validate_ids(&self) -> Result<()> {
        let mut seen: HashSet<&str> = HashSet::new();
        for split in Split::ALL {
            let mut local: HashSet<&str> = HashSet::new();
            for ex in self.split(split) {
                if ex.text.is_empty() {
                    return Err(Error::arg(format!(
                        "example {} in {split} split has empty text",
                        ex.id
                    )));
                }
                if !local.insert(&ex.id) {
                    return Err(Error::DuplicateId {
                        split: split.to_string(),
                        id: ex.id.clone(),
                    });
                }
            }
            if let Some(shared) = local.iter().find(|id| seen.contains(*id)) {
                return Err(Error::DuplicateId {
                    split: format!("{split} (also present in an earlier split)"),
                    id: shared.to_string(),
                });
            }
            seen.extend(local);
        }
        Ok(())
    }

    /// Every split must contain both classes. Degenerate fixtures skip this.
    pub fn validate_balance(&self) -> Result<()> {
        for split in Split::ALL {
            let examples = self.split(split);
            let off = examples.iter().filter(|e| e.label.is_offensive()).count();
            if off == 0 || off == examples.len() {
                return Err(Error::arg(format!(
                    "{} {split} split lacks one of the two classes",
                    self.language
                )));
            }
        }
        Ok(())
    }
}

/// At most one corpus per language, iterated in fixed language order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCatalog {
    entries: BTreeMap<Language, LanguageCorpus>,
}

impl CorpusCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_corpora(corpora: impl IntoIterator<Item = LanguageCorpus>) -> Result<Self> {
        let mut catalog = Self::new();
        for corpus in corpora {
            catalog.insert(corpus)?;
        }
        Ok(catalog)
    }

    /// Rejects a second corpus for a language already present.
    pub fn insert(&mut self, corpus: LanguageCorpus) -> Result<()> {
        if self.entries.contains_key(&corpus.language) {
            return Err(Error::arg(format!(
                "catalog already holds a {} corpus",
                corpus.language
            )));
        }
        self.entries.insert(corpus.language, corpus);
        Ok(())
    }

    pub fn get(&self, language: Language) -> Result<&LanguageCorpus> {
        self.entries
            .get(&language)
            .ok_or_else(|| Error::arg(format!("catalog has no {language} corpus")))
    }

    pub fn contains(&self, language: Language) -> bool {
        self.entries.contains_key(&language)
    }

    pub fn languages(&self) -> Vec<Language> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LanguageCorpus> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Restricts the catalog to the given languages (all must be present).
    pub fn subset(&self, languages: &[Language]) -> Result<Self> {
        let mut out = Self::new();
        for &lang in languages {
            out.insert(self.get(lang)?.clone())?;
        }
        Ok(out)
    }
}

/// Content hash over ids, texts, labels and languages, in order.
pub fn data_hash(examples: &[LabeledExample]) -> String {
    let mut hasher = Sha256::new();
    for ex in examples {
        for field in [
            ex.id.as_str(),
            ex.text.as_str(),
            ex.label.as_str(),
            &ex.language.code(),
        ] {
            hasher.update(field.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([b'\n']);
    }
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, label: Label) -> LabeledExample {
        LabeledExample::new(id, "some text", label, Language::En)
    }

    #[test]
    fn language_codes_round_trip() {
        for lang in Language::SHARED_TASK
            .into_iter()
            .chain([Language::Synthetic(0), Language::Synthetic(3)])
        {
            assert_eq!(lang.code().parse::<Language>().unwrap(), lang);
        }
        assert_eq!(Language::Synthetic(1).code(), "SYNTHETIC_B");
        assert!("XX".parse::<Language>().is_err());
    }

    #[test]
    fn language_order_is_fixed() {
        let mut langs = vec![
            Language::Synthetic(0),
            Language::Tr,
            Language::En,
            Language::Ar,
            Language::El,
            Language::Da,
        ];
        langs.sort();
        assert_eq!(
            langs,
            vec![
                Language::En,
                Language::Da,
                Language::El,
                Language::Ar,
                Language::Tr,
                Language::Synthetic(0)
            ]
        );
    }

    #[test]
    fn corpus_rejects_cross_split_ids() {
        let err = LanguageCorpus::new(
            Language::En,
            vec![ex("1", Label::Offensive)],
            vec![ex("1", Label::NotOffensive)],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { .. }));
    }

    #[test]
    fn corpus_rejects_duplicate_within_split() {
        let err = LanguageCorpus::new(
            Language::En,
            vec![ex("1", Label::Offensive), ex("1", Label::Offensive)],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { ref split, .. } if split == "train"));
    }

    #[test]
    fn catalog_holds_one_corpus_per_language() {
        let c = LanguageCorpus::new(Language::Da, vec![], vec![], vec![]).unwrap();
        let mut cat = CorpusCatalog::new();
        cat.insert(c.clone()).unwrap();
        assert!(cat.insert(c).is_err());
    }

    #[test]
    fn balance_check_flags_single_class_split() {
        let c = LanguageCorpus::new(
            Language::En,
            vec![ex("1", Label::Offensive), ex("2", Label::NotOffensive)],
            vec![ex("3", Label::Offensive), ex("4", Label::NotOffensive)],
            vec![ex("5", Label::Offensive)],
        )
        .unwrap();
        assert!(c.validate_balance().is_err());
    }

    #[test]
    fn data_hash_is_order_sensitive() {
        let a = vec![ex("1", Label::Offensive), ex("2", Label::NotOffensive)];
        let mut b = a.clone();
        b.reverse();
        assert_ne!(data_hash(&a), data_hash(&b));
        assert_eq!(data_hash(&a), data_hash(&a.clone()));
    }
}
