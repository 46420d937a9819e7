//! Forward and reverse-mode passes of the attention encoder/decoder.

use super::attention::AttentionStep;
use super::gru::GruStep;
use super::params::{Gradients, ModelParams};
use crate::corpus::{SentencePair, SOS};
use crate::error::{Error, Result};
use crate::scalar::{argmax, log_sum_exp, softmax, Scalar};
use crate::tensor::{axpy, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput<T> {
    /// One row `h_t` per source position.
    pub annotations: Matrix<T>,
    pub final_hidden: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderStepOutput<T> {
    pub state: Vec<T>,
    /// Distribution over the target vocabulary.
    pub probs: Vec<T>,
    /// Attention weights over source positions.
    pub weights: Vec<T>,
}

/// Where each decoder input comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feeding {
    /// Ground-truth previous target token.
    TeacherForced,
    /// The decoder's own argmax prediction from the previous step.
    Greedy,
}

struct EncoderRun<T> {
    steps: Vec<GruStep<T>>,
    output: EncoderOutput<T>,
}

struct DecoderRecord<T> {
    input: usize,
    attention: AttentionStep<T>,
    gru: GruStep<T>,
    probs: Vec<T>,
}

/// Everything the backward pass needs from a forward pass.
pub struct ForwardCache<T> {
    source: Vec<usize>,
    target: Vec<usize>,
    encoder_steps: Vec<GruStep<T>>,
    annotations: Matrix<T>,
    decoder_steps: Vec<DecoderRecord<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Token fed to the decoder at each step (starting with SOS).
    pub fn decoder_inputs(&self) -> Vec<usize> {
        self.decoder_steps.iter().map(|s| s.input).collect()
    }

    /// Argmax of the output distribution at each step.
    pub fn predictions(&self) -> Vec<usize> {
        self.decoder_steps.iter().map(|s| argmax(&s.probs)).collect()
    }

    pub fn output_distributions(&self) -> Vec<&[T]> {
        self.decoder_steps.iter().map(|s| s.probs.as_slice()).collect()
    }

    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }
}

pub struct ForwardOutput<T> {
    /// Mean negative log-likelihood per target token.
    pub loss: T,
    /// Attention weights, one row per decoder step.
    pub alphas: Matrix<T>,
    pub cache: ForwardCache<T>,
}

fn check_indices(indices: &[usize], vocab: usize, what: &str) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::contract(format!("{what} sequence is empty")));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= vocab) {
        return Err(Error::contract(format!(
            "{what} index {bad} out of range for vocabulary of {vocab}"
        )));
    }
    Ok(())
}

fn run_encoder<T: Scalar>(source: &[usize], params: &ModelParams<T>) -> EncoderRun<T> {
    let hidden = params.encoder.hidden_size();
    let mut annotations = Matrix::zeros(source.len(), hidden);
    let mut steps = Vec::with_capacity(source.len());
    let mut h = vec![T::zero(); hidden];
    for (t, &token) in source.iter().enumerate() {
        let step = params.encoder.step(params.src_embedding.row(token), &h);
        h.clone_from(&step.h);
        annotations.row_mut(t).copy_from_slice(&step.h);
        steps.push(step);
    }
    EncoderRun {
        steps,
        output: EncoderOutput {
            annotations,
            final_hidden: h,
        },
    }
}

/// Runs the GRU encoder from a zero initial state.
pub fn encoder_forward<T: Scalar>(source: &[usize], params: &ModelParams<T>) -> Result<EncoderOutput<T>> {
    check_indices(source, params.src_embedding.rows(), "source")?;
    Ok(run_encoder(source, params).output)
}

/// Decoder state carried across steps, with the annotation projections
/// computed once per source sequence.
pub(crate) struct DecoderContext<'a, T> {
    params: &'a ModelParams<T>,
    annotations: &'a Matrix<T>,
    keys: Matrix<T>,
}

impl<'a, T: Scalar> DecoderContext<'a, T> {
    pub(crate) fn new(params: &'a ModelParams<T>, annotations: &'a Matrix<T>) -> Self {
        DecoderContext {
            params,
            annotations,
            keys: params.attention.project_annotations(annotations),
        }
    }

    /// Returns attention activations, GRU activations and output logits.
    fn step(&self, y_prev: usize, s_prev: &[T]) -> (AttentionStep<T>, GruStep<T>, Vec<T>) {
        let p = self.params;
        let attention = p.attention.step(s_prev, self.annotations, &self.keys);
        let mut input = Vec::with_capacity(p.decoder.input_size());
        input.extend_from_slice(p.tgt_embedding.row(y_prev));
        input.extend_from_slice(&attention.context);
        let gru = p.decoder.step(&input, s_prev);
        let logits = p.w_out.matvec(&gru.h);
        (attention, gru, logits)
    }

    /// Next state and output distribution only.
    pub(crate) fn advance(&self, y_prev: usize, s_prev: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let (attention, gru, logits) = self.step(y_prev, s_prev);
        (gru.h, softmax(&logits), attention.weights)
    }
}

/// One decoder step: attention over `annotations` from `s_prev`, GRU update on
/// `[embed(y_prev); context]`, softmax over `w_out · s_p`.
pub fn decoder_step<T: Scalar>(
    y_prev_index: usize,
    s_prev: &[T],
    annotations: &Matrix<T>,
    params: &ModelParams<T>,
) -> Result<DecoderStepOutput<T>> {
    check_indices(&[y_prev_index], params.tgt_embedding.rows(), "decoder input")?;
    let hidden = params.encoder.hidden_size();
    if annotations.rows() == 0 {
        return Err(Error::contract("attention over an empty source"));
    }
    if s_prev.len() != hidden || annotations.cols() != hidden {
        return Err(Error::contract("decoder state or annotation width differs from hidden size"));
    }
    let (state, probs, weights) = DecoderContext::new(params, annotations).advance(y_prev_index, s_prev);
    Ok(DecoderStepOutput { state, probs, weights })
}

/// Encoder plus decoder over every target position, recording activations.
pub fn forward<T: Scalar>(pair: &SentencePair, params: &ModelParams<T>, feeding: Feeding) -> Result<ForwardOutput<T>> {
    check_indices(&pair.source, params.src_embedding.rows(), "source")?;
    check_indices(&pair.target, params.tgt_embedding.rows(), "target")?;

    let EncoderRun { steps, output } = run_encoder(&pair.source, params);
    let ctx = DecoderContext::new(params, &output.annotations);

    let mut decoder_steps = Vec::with_capacity(pair.target.len());
    let mut alphas = Matrix::zeros(pair.target.len(), pair.source.len());
    let mut total = T::zero();
    let mut s = output.final_hidden.clone();
    let mut input = SOS;
    for (p, &gold) in pair.target.iter().enumerate() {
        let (attention, gru, logits) = ctx.step(input, &s);
        total += log_sum_exp(&logits) - logits[gold];
        let probs = softmax(&logits);
        alphas.row_mut(p).copy_from_slice(&attention.weights);
        s.clone_from(&gru.h);
        let next = match feeding {
            Feeding::TeacherForced => gold,
            Feeding::Greedy => argmax(&probs),
        };
        decoder_steps.push(DecoderRecord {
            input,
            attention,
            gru,
            probs,
        });
        input = next;
    }
    drop(ctx);

    Ok(ForwardOutput {
        loss: total.div_fn(T::lit(pair.target.len() as f64)),
        alphas,
        cache: ForwardCache {
            source: pair.source.clone(),
            target: pair.target.clone(),
            encoder_steps: steps,
            annotations: output.annotations,
            decoder_steps,
        },
    })
}

pub fn forward_teacher_forced<T: Scalar>(pair: &SentencePair, params: &ModelParams<T>) -> Result<ForwardOutput<T>> {
    forward(pair, params, Feeding::TeacherForced)
}

/// Teacher-forced mean NLL without keeping the cache.
pub fn teacher_forced_loss<T: Scalar>(pair: &SentencePair, params: &ModelParams<T>) -> Result<T> {
    Ok(forward_teacher_forced(pair, params)?.loss)
}

/// Analytic gradient of the cached forward pass's loss.
///
/// Decoder inputs recorded in the cache are treated as constants, so under
/// [`Feeding::Greedy`] no gradient flows through the argmax choices.
pub fn backward<T: Scalar>(cache: &ForwardCache<T>, params: &ModelParams<T>) -> Gradients<T> {
    let mut grads = ModelParams::zeros(&params.config());
    let embed = params.tgt_embedding.cols();
    let hidden = params.encoder.hidden_size();
    let src_len = cache.source.len();
    let scale = T::one() / T::lit(cache.decoder_steps.len() as f64);

    let mut d_annotations = Matrix::zeros(src_len, hidden);
    let mut d_keys = Matrix::zeros(src_len, params.attention.attn_size());
    let mut ds_next = vec![T::zero(); hidden];

    for (record, &gold) in cache.decoder_steps.iter().zip(&cache.target).rev() {
        let mut d_logits: Vec<T> = record.probs.iter().map(|&p| p * scale).collect();
        d_logits[gold] -= scale;

        let mut ds = std::mem::replace(&mut ds_next, vec![T::zero(); hidden]);
        grads.w_out.add_outer(&d_logits, &record.gru.h);
        params.w_out.matvec_t_add(&d_logits, &mut ds);

        let mut dx = vec![T::zero(); embed + hidden];
        params
            .decoder
            .backward(&record.gru, &ds, &mut grads.decoder, &mut dx, &mut ds_next);
        axpy(T::one(), &dx[..embed], grads.tgt_embedding.row_mut(record.input));
        params.attention.backward(
            &record.attention,
            &record.gru.h_prev,
            &cache.annotations,
            &dx[embed..],
            &mut grads.attention,
            &mut ds_next,
            &mut d_annotations,
            &mut d_keys,
        );
    }
    params
        .attention
        .backward_keys(&cache.annotations, &d_keys, &mut grads.attention, &mut d_annotations);

    // s_0 is the encoder's final hidden state.
    axpy(T::one(), &ds_next, d_annotations.row_mut(src_len - 1));

    let mut dh_next = vec![T::zero(); hidden];
    for (t, step) in cache.encoder_steps.iter().enumerate().rev() {
        let mut dh = d_annotations.row(t).to_vec();
        axpy(T::one(), &dh_next, &mut dh);
        let mut dx = vec![T::zero(); embed];
        dh_next.iter_mut().for_each(|v| *v = T::zero());
        params.encoder.backward(step, &dh, &mut grads.encoder, &mut dx, &mut dh_next);
        axpy(T::one(), &dx, grads.src_embedding.row_mut(cache.source[t]));
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EOS;
    use crate::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(src: usize, tgt: usize, hidden: usize, seed: u64) -> ModelParams<f64> {
        ModelParams::init(&ModelConfig::new(src, tgt, hidden), &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn encoder_shapes_for_five_tokens() {
        let p = model(10, 10, 256, 0);
        let out = encoder_forward(&[3, 4, 5, 6, EOS], &p).unwrap();
        assert_eq!(out.annotations.shape(), (5, 256));
        assert_eq!(out.final_hidden.len(), 256);
        assert_eq!(out.annotations.row(4), out.final_hidden.as_slice());
    }

    #[test]
    fn single_token_encoder() {
        let p = model(6, 6, 4, 1);
        let out = encoder_forward(&[3], &p).unwrap();
        assert_eq!(out.annotations.rows(), 1);
        assert_eq!(out.annotations.row(0), out.final_hidden.as_slice());
    }

    #[test]
    fn zero_params_give_zero_annotations() {
        let p = ModelParams::<f64>::zeros(&ModelConfig::new(6, 6, 4));
        let out = encoder_forward(&[3, 4, 5], &p).unwrap();
        assert!(out.annotations.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let p = model(6, 6, 4, 1);
        assert!(encoder_forward(&[3, 6], &p).is_err());
        assert!(decoder_step(9, &[0.0; 4], &Matrix::zeros(2, 4), &p).is_err());
        let bad = SentencePair { source: vec![3, 1], target: vec![7, 1] };
        assert!(forward_teacher_forced(&bad, &p).is_err());
    }

    #[test]
    fn zero_output_projection_gives_uniform_distribution() {
        let mut p = model(6, 8, 4, 2);
        p.w_out.fill(0.0);
        let enc = encoder_forward(&[3, 4, EOS], &p).unwrap();
        let out = decoder_step(SOS, &enc.final_hidden, &enc.annotations, &p).unwrap();
        assert!(out.probs.iter().all(|&x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn first_decoder_step_starts_from_sos_and_final_hidden() {
        let p = model(6, 7, 4, 3);
        let pair = SentencePair { source: vec![3, 4, EOS], target: vec![5, EOS] };
        let fwd = forward_teacher_forced(&pair, &p).unwrap();
        let enc = encoder_forward(&pair.source, &p).unwrap();
        let manual = decoder_step(SOS, &enc.final_hidden, &enc.annotations, &p).unwrap();
        assert_eq!(fwd.cache.decoder_inputs(), vec![SOS, 5]);
        assert_eq!(fwd.cache.output_distributions()[0], manual.probs.as_slice());
        assert_eq!(fwd.alphas.row(0), manual.weights.as_slice());
    }

    #[test]
    fn greedy_feeding_uses_previous_argmax() {
        let p = model(6, 7, 4, 4);
        let pair = SentencePair { source: vec![3, 4, EOS], target: vec![5, 6, 3, EOS] };
        let fwd = forward(&pair, &p, Feeding::Greedy).unwrap();
        let preds = fwd.cache.predictions();
        let inputs = fwd.cache.decoder_inputs();
        assert_eq!(inputs[0], SOS);
        assert_eq!(&inputs[1..], &preds[..preds.len() - 1]);
    }

    #[test]
    fn loss_is_deterministic_and_non_negative() {
        let p = model(9, 9, 6, 5);
        let pair = SentencePair { source: vec![3, 8, 4, EOS], target: vec![7, 5, EOS] };
        let a = teacher_forced_loss(&pair, &p).unwrap();
        let b = teacher_forced_loss(&pair, &p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a >= 0.0);
    }

    #[test]
    fn gradient_shapes_match_params() {
        let p = model(9, 7, 5, 6);
        let pair = SentencePair { source: vec![3, 8, EOS], target: vec![4, 6, EOS] };
        let g = backward(&forward_teacher_forced(&pair, &p).unwrap().cache, &p);
        for (a, b) in p.tensors().iter().zip(g.tensors()) {
            assert_eq!(a.shape(), b.shape());
        }
    }

    /// All-zero model except a saturated decoder candidate and one huge
    /// output row: the softmax output is exactly one-hot on EOS.
    #[test]
    fn zero_loss_configuration_has_vanishing_output_gradient() {
        let mut p = ModelParams::<f64>::zeros(&ModelConfig::new(5, 4, 3));
        p.decoder.b_cand.fill(50.0);
        p.w_out.row_mut(EOS).fill(1e4);
        let pair = SentencePair { source: vec![3, EOS], target: vec![EOS] };
        let fwd = forward_teacher_forced(&pair, &p).unwrap();
        assert_eq!(fwd.loss, 0.0);
        let g = backward(&fwd.cache, &p);
        assert_eq!(g.w_out.max_abs(), 0.0);
    }

    #[test]
    fn f32_forward_runs() {
        let p = ModelParams::<f32>::init(&ModelConfig::new(6, 6, 4), &mut ChaCha8Rng::seed_from_u64(7));
        let pair = SentencePair { source: vec![3, 4, EOS], target: vec![5, EOS] };
        let loss = teacher_forced_loss(&pair, &p).unwrap();
        assert!(loss.is_finite() && loss > 0.0);
    }
}
