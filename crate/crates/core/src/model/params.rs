use rand::Rng;

use super::attention::{AttentionParams, ATTENTION_TENSOR_NAMES};
use super::gru::{GruCellParams, GRU_TENSOR_NAMES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Model dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub attn: usize,
}

impl ModelConfig {
    /// Embedding and attention widths both equal to `hidden`.
    pub fn new(src_vocab: usize, tgt_vocab: usize, hidden: usize) -> Self {
        ModelConfig {
            src_vocab,
            tgt_vocab,
            embed: hidden,
            hidden,
            attn: hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.src_vocab == 0 || self.tgt_vocab == 0 || self.embed == 0 || self.hidden == 0 || self.attn == 0 {
            return Err(Error::contract(format!("all model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Every trainable tensor of the encoder/attention/decoder model.
///
/// The decoder GRU consumes `[embed(y_prev); context]`, so its input width is
/// `embed + hidden`. Output logits are `w_out · s_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub src_embedding: Matrix<T>,
    pub tgt_embedding: Matrix<T>,
    pub encoder: GruCellParams<T>,
    pub decoder: GruCellParams<T>,
    pub attention: AttentionParams<T>,
    pub w_out: Matrix<T>,
}

/// Gradients share the parameter layout.
pub type Gradients<T> = ModelParams<T>;

/// Addresses one scalar parameter: tensor position in [`ModelParams::tensors`]
/// and flat row-major offset inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCoord {
    pub tensor: usize,
    pub index: usize,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        let ModelConfig {
            src_vocab,
            tgt_vocab,
            embed,
            hidden,
            attn,
        } = *config;
        ModelParams {
            src_embedding: Matrix::zeros(src_vocab, embed),
            tgt_embedding: Matrix::zeros(tgt_vocab, embed),
            encoder: GruCellParams::zeros(embed, hidden),
            decoder: GruCellParams::zeros(embed + hidden, hidden),
            attention: AttentionParams::zeros(attn, hidden),
            w_out: Matrix::zeros(tgt_vocab, hidden),
        }
    }

    /// Weights uniform in ±1/√hidden, biases zero.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let mut params = Self::zeros(config);
        let bound = 1.0 / (config.hidden as f64).sqrt();
        for (name, m) in params.named_tensors_mut() {
            if !name.contains(".b_") {
                *m = Matrix::random_uniform(m.rows(), m.cols(), bound, rng);
            }
        }
        params
    }

    /// Same parameters in another scalar type (through `f64`).
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let mut out = ModelParams::<U>::zeros(&self.config());
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.cast();
        }
        out
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            src_vocab: self.src_embedding.rows(),
            tgt_vocab: self.tgt_embedding.rows(),
            embed: self.src_embedding.cols(),
            hidden: self.encoder.hidden_size(),
            attn: self.attention.attn_size(),
        }
    }

    /// Verifies every tensor against the dimensions implied by the embeddings
    /// and the encoder.
    pub fn check_shapes(&self) -> Result<()> {
        let config = self.config();
        config.validate()?;
        let expected = Self::zeros(&config);
        for ((name, a), b) in self.named_tensors().into_iter().zip(expected.tensors()) {
            if a.shape() != b.shape() {
                return Err(Error::contract(format!(
                    "{name} has shape {:?}, expected {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn tensor_names() -> Vec<String> {
        let mut names = vec!["src_embedding".to_owned(), "tgt_embedding".to_owned()];
        names.extend(GRU_TENSOR_NAMES.iter().map(|n| format!("encoder.{n}")));
        names.extend(GRU_TENSOR_NAMES.iter().map(|n| format!("decoder.{n}")));
        names.extend(ATTENTION_TENSOR_NAMES.iter().map(|n| format!("attention.{n}")));
        names.push("w_out".to_owned());
        names
    }

    /// All tensors in a fixed canonical order.
    pub fn tensors(&self) -> Vec<&Matrix<T>> {
        let mut out = vec![&self.src_embedding, &self.tgt_embedding];
        out.extend(self.encoder.tensors());
        out.extend(self.decoder.tensors());
        out.extend(self.attention.tensors());
        out.push(&self.w_out);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut out = vec![&mut self.src_embedding, &mut self.tgt_embedding];
        out.extend(self.encoder.tensors_mut());
        out.extend(self.decoder.tensors_mut());
        out.extend(self.attention.tensors_mut());
        out.push(&mut self.w_out);
        out
    }

    pub fn named_tensors(&self) -> Vec<(String, &Matrix<T>)> {
        Self::tensor_names().into_iter().zip(self.tensors()).collect()
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        Self::tensor_names().into_iter().zip(self.tensors_mut()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }

    pub fn get(&self, coord: ParamCoord) -> T {
        self.tensors()[coord.tensor].as_slice()[coord.index]
    }

    pub fn set(&mut self, coord: ParamCoord, value: T) {
        self.tensors_mut()[coord.tensor].as_mut_slice()[coord.index] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    /// Plain SGD: `θ ← θ − lr · g`.
    pub fn sgd_update(&mut self, grads: &Gradients<T>, learning_rate: T) {
        for (p, g) in self.tensors_mut().into_iter().zip(grads.tensors()) {
            p.sub_scaled(g, learning_rate);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig::new(7, 5, 4);
        let p = ModelParams::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(p.config(), cfg);
        p.check_shapes().unwrap();
        assert_eq!(p.decoder.input_size(), 8);
        assert_eq!(p.w_out.shape(), (5, 4));
        assert_eq!(p.tensors().len(), ModelParams::<f64>::tensor_names().len());
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let cfg = ModelConfig::new(6, 6, 16);
        let p = ModelParams::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        for (name, m) in p.named_tensors() {
            if name.contains(".b_") {
                assert_eq!(m.max_abs(), 0.0, "{name}");
            } else {
                assert!(m.max_abs() <= 0.25 && m.max_abs() > 0.0, "{name}");
            }
        }
    }

    #[test]
    fn sgd_update_is_exact() {
        let cfg = ModelConfig::new(4, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::<f64>::init(&cfg, &mut rng);
        let g = ModelParams::<f64>::init(&cfg, &mut rng);
        let mut updated = p.clone();
        updated.sgd_update(&g, 0.01);
        for ((a, b), c) in p.tensors().iter().zip(g.tensors()).zip(updated.tensors()) {
            for ((&x, &y), &z) in a.as_slice().iter().zip(b.as_slice()).zip(c.as_slice()) {
                assert_eq!(z, x - 0.01 * y);
            }
        }
    }

    #[test]
    fn inconsistent_shapes_detected() {
        let mut p = ModelParams::<f64>::zeros(&ModelConfig::new(4, 4, 2));
        p.w_out = Matrix::zeros(3, 2);
        assert!(p.check_shapes().is_err());
    }
}
