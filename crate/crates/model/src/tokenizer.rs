//! Word-to-subword tokenisation. Random-init encoders use a closed word
//! vocabulary built from training data; pretrained encoders use the
//! checkpoint's own `tokenizer.json`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

/// One id per word; unseen words map to `[UNK]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordVocab {
    pub tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl WordVocab {
    pub fn new(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        WordVocab { tokens, index }
    }

    /// Specials followed by every distinct word, sorted.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let distinct: BTreeSet<&str> = words.into_iter().collect();
        let tokens = [PAD, UNK, CLS, SEP]
            .into_iter()
            .chain(distinct.into_iter().filter(|w| ![PAD, UNK, CLS, SEP].contains(w)))
            .map(String::from)
            .collect();
        WordVocab::new(tokens)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub enum WordTokenizer {
    Vocab(WordVocab),
    Pretrained {
        inner: Box<tokenizers::Tokenizer>,
        cls: u32,
        sep: u32,
        unk: u32,
    },
}

fn find_special(tok: &tokenizers::Tokenizer, names: &[&str]) -> Option<u32> {
    names.iter().find_map(|n| tok.token_to_id(n))
}

impl WordTokenizer {
    pub fn from_file(path: &Path) -> Result<Self> {
        let inner = tokenizers::Tokenizer::from_file(path).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let need = |names: &[&str]| {
            find_special(&inner, names).ok_or_else(|| Error::Checkpoint {
                path: path.to_path_buf(),
                reason: format!("tokenizer lacks any of {names:?}"),
            })
        };
        let cls = need(&[CLS, "<s>"])?;
        let sep = need(&[SEP, "</s>"])?;
        let unk = need(&[UNK, "<unk>"])?;
        Ok(WordTokenizer::Pretrained {
            inner: Box::new(inner),
            cls,
            sep,
            unk,
        })
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            WordTokenizer::Vocab(v) => v.len(),
            WordTokenizer::Pretrained { inner, .. } => inner.get_vocab_size(true),
        }
    }

    pub fn cls(&self) -> u32 {
        match self {
            WordTokenizer::Vocab(v) => v.id(CLS).unwrap_or(2),
            WordTokenizer::Pretrained { cls, .. } => *cls,
        }
    }

    pub fn sep(&self) -> u32 {
        match self {
            WordTokenizer::Vocab(v) => v.id(SEP).unwrap_or(3),
            WordTokenizer::Pretrained { sep, .. } => *sep,
        }
    }

    /// Subword ids per word. Words the tokenizer drops entirely become a
    /// single unknown token so every word keeps at least one position.
    pub fn tokenize(&self, words: &[String]) -> Result<Vec<Vec<u32>>> {
        match self {
            WordTokenizer::Vocab(v) => {
                let unk = v.id(UNK).unwrap_or(1);
                Ok(words.iter().map(|w| vec![v.id(w).unwrap_or(unk)]).collect())
            }
            WordTokenizer::Pretrained { inner, unk, .. } => {
                let mut out = vec![Vec::new(); words.len()];
                if words.is_empty() {
                    return Ok(out);
                }
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                let enc = inner
                    .encode(refs.as_slice(), false)
                    .map_err(|e| Error::Tokenizer(e.to_string()))?;
                for (id, word) in enc.get_ids().iter().zip(enc.get_word_ids()) {
                    if let Some(w) = word {
                        out[*w as usize].push(*id);
                    }
                }
                for ids in &mut out {
                    if ids.is_empty() {
                        ids.push(*unk);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Persist next to a checkpoint as `vocab.json` or `tokenizer.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let io = |e: String| Error::Checkpoint {
            path: dir.to_path_buf(),
            reason: e,
        };
        match self {
            WordTokenizer::Vocab(v) => {
                let text = serde_json::to_string(&v.tokens).map_err(|e| io(e.to_string()))?;
                std::fs::write(dir.join("vocab.json"), text).map_err(|e| io(e.to_string()))
            }
            WordTokenizer::Pretrained { inner, .. } => inner
                .save(dir.join("tokenizer.json"), false)
                .map_err(|e| io(e.to_string())),
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let vocab = dir.join("vocab.json");
        if vocab.exists() {
            let text = std::fs::read_to_string(&vocab).map_err(|e| Error::Checkpoint {
                path: vocab.clone(),
                reason: e.to_string(),
            })?;
            let tokens: Vec<String> = serde_json::from_str(&text).map_err(|e| Error::Checkpoint {
                path: vocab.clone(),
                reason: e.to_string(),
            })?;
            return Ok(WordTokenizer::Vocab(WordVocab::new(tokens)));
        }
        WordTokenizer::from_file(&dir.join("tokenizer.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_maps_unknown_words() {
        let v = WordVocab::build(["b", "a", "b"]);
        assert_eq!(v.tokens, vec![PAD, UNK, CLS, SEP, "a", "b"]);
        let tok = WordTokenizer::Vocab(v);
        let ids = tok.tokenize(&["a".into(), "zzz".into()]).unwrap();
        assert_eq!(ids, vec![vec![4], vec![1]]);
        assert_eq!((tok.cls(), tok.sep()), (2, 3));
    }
}
