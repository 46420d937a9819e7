use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const SOS: usize = 0;
pub const EOS: usize = 1;
pub const UNK: usize = 2;
/// Number of reserved entries at the start of every vocabulary.
pub const RESERVED: usize = 3;

pub const SOS_TOKEN: &str = "<sos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

/// Bidirectional word/index map. Indices `0..RESERVED` are SOS, EOS, UNK;
/// other words follow in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_index: HashMap<String, usize>,
    index_to_word: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// A vocabulary holding only the reserved tokens.
    pub fn new() -> Self {
        let mut vocab = Vocabulary {
            word_to_index: HashMap::new(),
            index_to_word: Vec::new(),
        };
        for token in [SOS_TOKEN, EOS_TOKEN, UNK_TOKEN] {
            vocab.insert(token);
        }
        vocab
    }

    /// Rebuilds a vocabulary from the non-reserved words in index order.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::new();
        for word in words {
            let word = word.as_ref();
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(Error::Dataset(format!("invalid vocabulary entry {word:?}")));
            }
            if vocab.word_to_index.contains_key(word) {
                return Err(Error::Dataset(format!("duplicate vocabulary entry {word:?}")));
            }
            vocab.insert(word);
        }
        Ok(vocab)
    }

    /// Adds `word` if absent and returns its index.
    pub fn insert(&mut self, word: &str) -> usize {
        if let Some(&i) = self.word_to_index.get(word) {
            return i;
        }
        let i = self.index_to_word.len();
        self.word_to_index.insert(word.to_owned(), i);
        self.index_to_word.push(word.to_owned());
        i
    }

    pub fn len(&self) -> usize {
        self.index_to_word.len()
    }

    /// Always false: the reserved entries are present.
    pub fn is_empty(&self) -> bool {
        self.index_to_word.is_empty()
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.word_to_index.get(word).copied()
    }

    pub fn index_or_unk(&self, word: &str) -> usize {
        self.index(word).unwrap_or(UNK)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.index_to_word.get(index).map(String::as_str)
    }

    /// Words after the reserved block, in index order.
    pub fn words(&self) -> &[String] {
        &self.index_to_word[RESERVED..]
    }

    /// Maps indices back to words, stopping at the first EOS and skipping SOS.
    pub fn decode(&self, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .take_while(|&&i| i != EOS)
            .filter(|&&i| i != SOS)
            .map(|&i| self.word(i).unwrap_or(UNK_TOKEN).to_owned())
            .collect()
    }

    /// Writes one non-reserved word per line; line `n` holds index `n + RESERVED`.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for word in self.words() {
            text.push_str(word);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_words(text.lines())
    }
}

/// Builds a vocabulary from tokenized paragraphs in first-appearance order.
pub fn build_vocabulary<S: AsRef<str>>(paragraphs: &[Vec<S>]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for token in paragraphs.iter().flatten() {
        vocab.insert(token.as_ref());
    }
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_count() {
        let v = build_vocabulary(&[vec!["a", "b"], vec!["b", "c"]]);
        assert_eq!(v.len(), 6);
        assert_eq!(v.index("a"), Some(3));
        assert_eq!(v.index("c"), Some(5));
        assert_eq!(v.word(SOS), Some(SOS_TOKEN));
        assert_eq!(v.word(EOS), Some(EOS_TOKEN));
        assert_eq!(v.word(UNK), Some(UNK_TOKEN));
    }

    #[test]
    fn empty_corpus_has_reserved_only() {
        let v = build_vocabulary::<&str>(&[]);
        assert_eq!(v.len(), RESERVED);
        assert!(v.words().is_empty());
    }

    #[test]
    fn maps_are_inverse_and_contiguous() {
        let v = build_vocabulary(&[vec!["x", "y", "x", "z", "."]]);
        for i in 0..v.len() {
            assert_eq!(v.index(v.word(i).unwrap()), Some(i));
        }
        for w in v.words() {
            assert_eq!(v.word(v.index(w).unwrap()), Some(w.as_str()));
        }
        assert_eq!(v.word(v.len()), None);
    }

    #[test]
    fn unknown_words_map_to_unk() {
        let v = build_vocabulary(&[vec!["a"]]);
        assert_eq!(v.index_or_unk("zzz"), UNK);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let v = build_vocabulary(&[vec!["selamat", "pagi", "."]]);
        v.write_file(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "selamat\npagi\n.\n");
        assert_eq!(Vocabulary::read_file(&path).unwrap(), v);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(Vocabulary::from_words(["a", "a"]).is_err());
        assert!(Vocabulary::from_words([SOS_TOKEN]).is_err());
    }
}
