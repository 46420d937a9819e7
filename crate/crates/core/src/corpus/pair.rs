use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, EOS};
use crate::error::{Error, Result};

/// Encoded training unit. Both sequences end with a single EOS index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
}

impl SentencePair {
    /// Checks the EOS terminator and index bounds against vocabulary sizes.
    pub fn validate(&self, src_vocab: usize, tgt_vocab: usize) -> Result<()> {
        for (name, seq, size) in [("source", &self.source, src_vocab), ("target", &self.target, tgt_vocab)] {
            if seq.last() != Some(&EOS) || seq.iter().filter(|&&i| i == EOS).count() != 1 {
                return Err(Error::contract(format!("{name} must end with exactly one EOS")));
            }
            if let Some(&bad) = seq.iter().find(|&&i| i >= size) {
                return Err(Error::contract(format!(
                    "{name} index {bad} out of range for vocabulary of {size}"
                )));
            }
        }
        Ok(())
    }
}

/// Maps tokens to indices (UNK when absent) and appends EOS to both sides.
pub fn encode_pair<S: AsRef<str>>(
    vocab_src: &Vocabulary,
    vocab_tgt: &Vocabulary,
    src: &[S],
    tgt: &[S],
) -> Result<SentencePair> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::contract("cannot encode an empty sequence"));
    }
    let encode = |vocab: &Vocabulary, tokens: &[S]| {
        tokens
            .iter()
            .map(|t| vocab.index_or_unk(t.as_ref()))
            .chain(std::iter::once(EOS))
            .collect()
    };
    Ok(SentencePair {
        source: encode(vocab_src, src),
        target: encode(vocab_tgt, tgt),
    })
}

/// Writes one JSON object per line: `{"source":[..],"target":[..]}`.
pub fn write_pairs(path: &Path, pairs: &[SentencePair]) -> Result<()> {
    let mut out = Vec::new();
    for pair in pairs {
        serde_json::to_writer(&mut out, pair).expect("pair serialises");
        out.write_all(b"\n").expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: &Path) -> Result<Vec<SentencePair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
