use crate::corpus::{split_contextual_paragraphs, tokenize, EOS, SOS};
use crate::error::{Error, Result};
use crate::model::{encoder_forward, DecoderContext, ModelParams, Translator};
use crate::scalar::{argmax, Scalar};

/// Greedy decoding from SOS and the encoder's final state. Stops at EOS or
/// after `max_len` tokens; SOS and EOS are not included in the result.
pub fn greedy_decode<T: Scalar>(source: &[usize], params: &ModelParams<T>, max_len: usize) -> Result<Vec<usize>> {
    if max_len == 0 {
        return Err(Error::contract("max_len must be at least 1"));
    }
    let encoded = encoder_forward(source, params)?;
    let ctx = DecoderContext::new(params, &encoded.annotations);
    let mut state = encoded.final_hidden;
    let mut token = SOS;
    let mut out = Vec::new();
    while out.len() < max_len {
        let (next_state, probs, _) = ctx.advance(token, &state);
        state = next_state;
        token = argmax(&probs);
        if token == EOS {
            break;
        }
        out.push(token);
    }
    Ok(out)
}

impl<T: Scalar> Translator<T> {
    /// Translates one tokenized paragraph. Unknown source words map to UNK.
    pub fn translate_tokens<S: AsRef<str>>(&self, tokens: &[S], max_len: usize) -> Result<Vec<String>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let mut source: Vec<usize> = tokens.iter().map(|t| self.src_vocab.index_or_unk(t.as_ref())).collect();
        source.push(EOS);
        let output = greedy_decode(&source, &self.params, max_len)?;
        Ok(self.tgt_vocab.decode(&output))
    }

    /// Splits `text` into contextual paragraphs, translates each, and joins
    /// the results with blank lines.
    pub fn translate_text(&self, text: &str, max_len: usize) -> Result<String> {
        let paragraphs = split_contextual_paragraphs(text)
            .iter()
            .map(|p| self.translate_tokens(&tokenize(p), max_len).map(|t| t.join(" ")))
            .collect::<Result<Vec<_>>>()?;
        Ok(paragraphs.join("\n\n"))
    }
}
