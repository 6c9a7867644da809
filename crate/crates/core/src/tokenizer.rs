//! BERT-style tokenization: whitespace and punctuation pre-splitting followed
//! by greedy longest-match WordPiece over a fixed vocabulary.
//!
//! Desk encoders use a whole-word vocabulary built from training text; a
//! pretrained checkpoint supplies its own `vocab.txt`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::corpus::LabeledExample;
use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";
const SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];
const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::arg(format!("vocabulary lists {t:?} twice")));
            }
        }
        for special in [PAD, UNK, CLS, SEP] {
            if !index.contains_key(special) {
                return Err(Error::arg(format!("vocabulary lacks {special}")));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Specials followed by every pre-split word seen at least `min_count`
    /// times, most frequent first (ties alphabetical).
    pub fn build<'a>(
        examples: impl IntoIterator<Item = &'a LabeledExample>,
        min_count: usize,
        lowercase: bool,
    ) -> Result<Self> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for ex in examples {
            for word in pre_tokenize(&ex.text, lowercase) {
                *counts.entry(word).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count.max(1) && !SPECIALS.contains(&w.as_str()))
            .collect();
        if words.is_empty() {
            return Err(Error::arg("cannot build a vocabulary from empty text"));
        }
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(words.into_iter().map(|(w, _)| w))
            .collect();
        Self::from_tokens(tokens)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_tokens(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut body = self.tokens.join("\n");
        body.push('\n');
        fs::write(path, body)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    fn special(&self, token: &str) -> u32 {
        self.index[token]
    }

    pub fn pad_id(&self) -> u32 {
        self.special(PAD)
    }

    pub fn unk_id(&self) -> u32 {
        self.special(UNK)
    }

    pub fn cls_id(&self) -> u32 {
        self.special(CLS)
    }

    pub fn sep_id(&self) -> u32 {
        self.special(SEP)
    }
}

/// One encoded input: ids with `[CLS]`/`[SEP]` boundaries, the surface piece
/// for every id, and the pre-split word each piece came from (`None` for
/// boundary tokens).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub pieces: Vec<String>,
    pub word_index: Vec<Option<usize>>,
    pub words: Vec<String>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPieceTokenizer {
    vocab: Vocabulary,
    lowercase: bool,
}

impl WordPieceTokenizer {
    pub fn new(vocab: Vocabulary, lowercase: bool) -> Self {
        Self { vocab, lowercase }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    /// WordPiece split of one pre-split word into vocabulary ids. A word with
    /// no complete segmentation becomes a single `[UNK]`.
    fn word_pieces(&self, word: &str) -> Vec<(u32, String)> {
        if word.chars().count() > MAX_WORD_CHARS {
            return vec![(self.vocab.unk_id(), word.to_string())];
        }
        let chars: Vec<char> = word.chars().collect();
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece = format!("{CONTINUATION}{piece}");
                }
                if let Some(id) = self.vocab.id(&piece) {
                    found = Some((id, piece));
                    break;
                }
                end -= 1;
            }
            match found {
                Some(hit) => {
                    out.push(hit);
                    start = end;
                }
                None => return vec![(self.vocab.unk_id(), word.to_string())],
            }
        }
        out
    }

    /// `[CLS] pieces [SEP]`, truncating pieces so the whole sequence fits in
    /// `max_len` (at least 2).
    pub fn encode(&self, text: &str, max_len: usize) -> Encoding {
        let words = pre_tokenize(text, self.lowercase);
        let budget = max_len.saturating_sub(2);
        let mut enc = Encoding {
            ids: vec![self.vocab.cls_id()],
            pieces: vec![CLS.to_string()],
            word_index: vec![None],
            words: Vec::new(),
        };
        for (w, word) in words.iter().enumerate() {
            if enc.ids.len() - 1 >= budget {
                break;
            }
            enc.words.push(word.clone());
            for (id, piece) in self.word_pieces(word) {
                if enc.ids.len() - 1 >= budget {
                    break;
                }
                enc.ids.push(id);
                enc.pieces.push(piece);
                enc.word_index.push(Some(w));
            }
        }
        enc.ids.push(self.vocab.sep_id());
        enc.pieces.push(SEP.to_string());
        enc.word_index.push(None);
        enc
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || ('\u{2000}'..='\u{206F}').contains(&c)
        || ('\u{3000}'..='\u{303F}').contains(&c)
        || matches!(c, '¡' | '¿' | '«' | '»' | '·' | '،' | '؛' | '؟')
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0x20000..=0x2A6DF | 0xF900..=0xFAFF | 0x2F800..=0x2FA1F)
}

/// Whitespace split, then punctuation and CJK characters as their own tokens.
pub fn pre_tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = if lowercase {
            chunk.to_lowercase()
        } else {
            chunk.to_string()
        };
        let mut current = String::new();
        for c in chunk.chars() {
            if is_punctuation(c) || is_cjk(c) {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(c.to_string());
            } else if !c.is_control() {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}
