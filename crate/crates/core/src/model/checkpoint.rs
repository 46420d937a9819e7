//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "NMTCKPT\0"
//! version    u32
//! dtype      u8       1 = f32, 2 = f64
//! dims       5 × u64  src_vocab, tgt_vocab, embed, hidden, attn
//! vocab ×2   u64 word count, then per word: u32 byte length + UTF-8
//!            (source first; reserved entries are implicit)
//! tensors    u32 count, then per tensor: u16 name length + name,
//!            u64 rows, u64 cols, rows × cols values row-major
//! ```
//!
//! Encoding is canonical, so save → load → save reproduces identical bytes.

use std::fs;
use std::path::Path;

use super::params::{ModelConfig, ModelParams};
use crate::corpus::{Vocabulary, RESERVED};
use crate::error::{Error, Result};
use crate::scalar::{DType, Scalar};
use crate::tensor::Matrix;

pub const MAGIC: [u8; 8] = *b"NMTCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

/// Parameters together with the vocabularies they were trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct Translator<T> {
    pub params: ModelParams<T>,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
}

impl<T: Scalar> Translator<T> {
    pub fn new(params: ModelParams<T>, src_vocab: Vocabulary, tgt_vocab: Vocabulary) -> Result<Self> {
        params.check_shapes()?;
        let cfg = params.config();
        if cfg.src_vocab != src_vocab.len() || cfg.tgt_vocab != tgt_vocab.len() {
            return Err(Error::contract(format!(
                "vocabulary sizes {}/{} do not match embeddings {}/{}",
                src_vocab.len(),
                tgt_vocab.len(),
                cfg.src_vocab,
                cfg.tgt_vocab
            )));
        }
        Ok(Translator {
            params,
            src_vocab,
            tgt_vocab,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.params.config();
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(T::DTYPE as u8);
        for dim in [cfg.src_vocab, cfg.tgt_vocab, cfg.embed, cfg.hidden, cfg.attn] {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for vocab in [&self.src_vocab, &self.tgt_vocab] {
            out.extend_from_slice(&(vocab.words().len() as u64).to_le_bytes());
            for word in vocab.words() {
                out.extend_from_slice(&(word.len() as u32).to_le_bytes());
                out.extend_from_slice(word.as_bytes());
            }
        }
        let tensors = self.params.named_tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, m) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for &v in m.as_slice() {
                v.write_le(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let tag = r.u8()?;
        match DType::from_tag(tag) {
            Some(d) if d == T::DTYPE => {}
            Some(d) => {
                return Err(Error::Checkpoint(format!(
                    "stored as {d:?}, requested {:?}",
                    T::DTYPE
                )))
            }
            None => return Err(Error::Checkpoint(format!("unknown dtype tag {tag}"))),
        }
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = r.usize()?;
        }
        let config = ModelConfig {
            src_vocab: dims[0],
            tgt_vocab: dims[1],
            embed: dims[2],
            hidden: dims[3],
            attn: dims[4],
        };
        config.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;

        let src_vocab = r.vocabulary()?;
        let tgt_vocab = r.vocabulary()?;

        let mut params = ModelParams::zeros(&config);
        let count = r.u32()? as usize;
        let names = ModelParams::<T>::tensor_names();
        if count != names.len() {
            return Err(Error::Checkpoint(format!("expected {} tensors, found {count}", names.len())));
        }
        for (expected, slot) in names.iter().zip(params.tensors_mut()) {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            if name != expected {
                return Err(Error::Checkpoint(format!("expected tensor {expected}, found {name}")));
            }
            let (rows, cols) = (r.usize()?, r.usize()?);
            if (rows, cols) != slot.shape() {
                return Err(Error::Checkpoint(format!(
                    "{name}: shape {rows}x{cols}, expected {:?}",
                    slot.shape()
                )));
            }
            let raw = r.take(rows * cols * T::WIDTH)?;
            let data = raw.chunks_exact(T::WIDTH).map(T::read_le).collect();
            *slot = Matrix::from_vec(rows, cols, data)?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Translator::new(params, src_vocab, tgt_vocab).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("value {v} too large")))
    }

    fn vocabulary(&mut self) -> Result<Vocabulary> {
        let count = self.usize()?;
        if count > self.bytes.len() {
            return Err(Error::Checkpoint(format!("implausible vocabulary size {}", count + RESERVED)));
        }
        let mut words = Vec::with_capacity(count);
        for _ in 0..count {
            let len = self.u32()? as usize;
            let word = std::str::from_utf8(self.take(len)?)
                .map_err(|_| Error::Checkpoint("vocabulary entry is not UTF-8".into()))?;
            words.push(word);
        }
        Vocabulary::from_words(words).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Translator<f64> {
        let src = build_vocabulary(&[vec!["selamat", "pagi", "."]]);
        let tgt = build_vocabulary(&[vec!["good", "morning"]]);
        let params = ModelParams::init(&ModelConfig::new(src.len(), tgt.len(), 3), &mut ChaCha8Rng::seed_from_u64(5));
        Translator::new(params, src, tgt).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let t = sample();
        let bytes = t.to_bytes();
        let loaded = Translator::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(loaded, t);
        assert_eq!(loaded.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().to_bytes();
        assert!(Translator::<f64>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Translator::<f64>::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(Translator::<f64>::from_bytes(&magic), Err(Error::Checkpoint(_))));
        assert!(Translator::<f32>::from_bytes(&bytes).is_err());
        assert!(Translator::<f64>::from_bytes(b"").is_err());
    }

    #[test]
    fn vocabulary_size_must_match_embeddings() {
        let t = sample();
        assert!(Translator::new(t.params.clone(), Vocabulary::new(), t.tgt_vocab.clone()).is_err());
    }

    #[test]
    fn f32_round_trip() {
        let t = sample();
        let src = t.src_vocab.clone();
        let tgt = t.tgt_vocab.clone();
        let p32 = ModelParams::<f32>::init(&t.params.config(), &mut ChaCha8Rng::seed_from_u64(1));
        let t32 = Translator::new(p32, src, tgt).unwrap();
        let bytes = t32.to_bytes();
        assert_eq!(Translator::<f32>::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }
}
