//! OLID-style TSV ingestion.
//!
//! A corpus directory holds `train.tsv`, `dev.tsv` and `test.tsv`, each with a
//! header row naming at least `id`, `tweet` and `subtask_a` columns. A test
//! file without a `subtask_a` column takes its labels from `test_labels.tsv`
//! (`id<TAB>label`, header optional). When `<dir>/<lang>/` exists (e.g.
//! `data/da/train.tsv`) it is used in preference to `<dir>` itself.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{normalize_text, Label, LabeledExample, Language, LanguageCorpus, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    #[default]
    OlidTsv,
}

pub const LABELS_FILE: &str = "test_labels.tsv";

pub fn load_corpus(path: &Path, language: Language, format: CorpusFormat) -> Result<LanguageCorpus> {
    let CorpusFormat::OlidTsv = format;
    let nested = path.join(language.file_stem());
    let dir = if nested.is_dir() { nested } else { path.to_path_buf() };

    let train = load_split(&dir, Split::Train, language)?;
    let dev = load_split(&dir, Split::Dev, language)?;
    let test = load_split(&dir, Split::Test, language)?;
    LanguageCorpus::new(language, train, dev, test)
}

/// Loads `<dir>/<split>.tsv`.
pub fn load_split(dir: &Path, split: Split, language: Language) -> Result<Vec<LabeledExample>> {
    let path = dir.join(format!("{split}.tsv"));
    let mut reader = open_tsv(&path, split, true)?;
    let malformed = |reason: String| Error::MalformedData {
        split: split.to_string(),
        path: path.clone(),
        reason,
    };

    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let id_col = column("id").ok_or_else(|| malformed("header lacks an `id` column".into()))?;
    let text_col = column("tweet")
        .or_else(|| column("text"))
        .ok_or_else(|| malformed("header lacks a `tweet` column".into()))?;
    let label_col = column("subtask_a");

    let external_labels = match label_col {
        Some(_) => None,
        None if split == Split::Test => Some(load_label_file(dir, split)?),
        None => return Err(malformed("header lacks a `subtask_a` column".into())),
    };

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(format!("row {}: {e}", row + 2)))?;
        let field = |col: usize| {
            record
                .get(col)
                .ok_or_else(|| malformed(format!("row {} has too few columns", row + 2)))
        };
        let id = field(id_col)?.trim().to_string();
        let token = match (&external_labels, label_col) {
            (_, Some(col)) => field(col)?.to_string(),
            (Some(labels), None) => labels.get(&id).cloned().ok_or_else(|| {
                malformed(format!("no label for id {id} in {LABELS_FILE}"))
            })?,
            (None, None) => unreachable!(),
        };
        let label = Label::parse_olid(&token).ok_or_else(|| Error::UnknownLabel {
            row_id: id.clone(),
            token: token.trim().to_string(),
        })?;
        let text = normalize_text(field(text_col)?);
        if text.is_empty() {
            return Err(malformed(format!("row {id} is empty after normalization")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                split: split.to_string(),
                id,
            });
        }
        out.push(LabeledExample {
            id,
            text,
            label,
            language,
        });
    }
    Ok(out)
}

fn open_tsv(path: &PathBuf, split: Split, has_headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::MissingSplit {
        split: split.to_string(),
        path: path.clone(),
        reason: e.to_string(),
    })?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(has_headers)
        .flexible(true)
        .from_reader(file))
}

fn load_label_file(dir: &Path, split: Split) -> Result<HashMap<String, String>> {
    let path = dir.join(LABELS_FILE);
    let mut reader = open_tsv(&path, split, false)?;
    let mut labels = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedData {
            split: split.to_string(),
            path: path.clone(),
            reason: e.to_string(),
        })?;
        let (Some(id), Some(label)) = (record.get(0), record.get(1)) else {
            return Err(Error::MalformedData {
                split: split.to_string(),
                path: path.clone(),
                reason: format!("row {} is not `id<TAB>label`", row + 1),
            });
        };
        if row == 0 && id.trim().eq_ignore_ascii_case("id") {
            continue;
        }
        labels.insert(id.trim().to_string(), label.trim().to_string());
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn fixture(dir: &Path) {
        write(
            dir,
            "train.tsv",
            "id\ttweet\tsubtask_a\tsubtask_b\n1\t@USER you suck\tOFF\tTIN\n2\tnice day  out\tNOT\tNULL\n3\tsee https://t.co/x idiot\tOFF\tUNT\n",
        );
        write(dir, "dev.tsv", "id\ttweet\tsubtask_a\n4\tfine\tNOT\n5\tugh \"quoted\" thing\tOFF\n");
        write(dir, "test.tsv", "id\ttweet\n6\thello\n7\tworst ever\n");
        write(dir, LABELS_FILE, "6\tNOT\n7\tOFF\n");
    }

    #[test]
    fn loads_three_row_fixture() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let c = load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv).unwrap();
        assert_eq!((c.train.len(), c.dev.len(), c.test.len()), (3, 2, 2));
        let off = c.train.iter().filter(|e| e.label == Label::Offensive).count();
        assert_eq!((off, c.train.len() - off), (2, 1));
        assert_eq!(c.train[1].text, "nice day out");
        assert_eq!(c.train[2].text, "see URL idiot");
        assert_eq!(c.dev[1].text, "ugh \"quoted\" thing");
        assert_eq!(c.test[1].label, Label::Offensive);
        assert!(c.train.iter().all(|e| e.language == Language::En));
    }

    #[test]
    fn prefers_language_subdirectory() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("da");
        fs::create_dir(&sub).unwrap();
        fixture(&sub);
        let c = load_corpus(dir.path(), Language::Da, CorpusFormat::OlidTsv).unwrap();
        assert_eq!(c.language, Language::Da);
        assert_eq!(c.train.len(), 3);
    }

    #[test]
    fn unknown_label_names_row() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        write(dir.path(), "train.tsv", "id\ttweet\tsubtask_a\n1\ta\tOFF\n42\tb\tMAYBE\n");
        match load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv) {
            Err(Error::UnknownLabel { row_id, token }) => {
                assert_eq!(row_id, "42");
                assert_eq!(token, "MAYBE");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_names_split() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        fs::remove_file(dir.path().join("dev.tsv")).unwrap();
        match load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv) {
            Err(Error::MissingSplit { split, .. }) => assert_eq!(split, "dev"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        write(dir.path(), "dev.tsv", "id\ttweet\tsubtask_a\n9\ta\tOFF\n9\tb\tNOT\n");
        assert!(matches!(
            load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv),
            Err(Error::DuplicateId { ref split, ref id }) if split == "dev" && id == "9"
        ));
    }

    #[test]
    fn loading_twice_is_equal() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let a = load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv).unwrap();
        let b = load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_file_may_have_header() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        write(dir.path(), LABELS_FILE, "id\tlabel\n6\tNOT\n7\tOFF\n");
        let c = load_corpus(dir.path(), Language::En, CorpusFormat::OlidTsv).unwrap();
        assert_eq!(c.test[0].label, Label::NotOffensive);
    }
}
