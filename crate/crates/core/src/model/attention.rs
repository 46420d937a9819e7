use crate::error::{Error, Result};
use crate::scalar::{softmax, Scalar};
use crate::tensor::{axpy, dot, Matrix};

/// Additive attention: `score_t = vᵀ tanh(W_state s_prev + W_annot h_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    /// attn × hidden, applied to the previous decoder state.
    pub w_state: Matrix<T>,
    /// attn × hidden, applied to each encoder annotation.
    pub w_annot: Matrix<T>,
    /// attn × 1.
    pub v: Matrix<T>,
}

pub(crate) const ATTENTION_TENSOR_NAMES: [&str; 3] = ["w_state", "w_annot", "v"];

/// Activations of one attention evaluation.
#[derive(Debug, Clone)]
pub(crate) struct AttentionStep<T> {
    /// `tanh(W_state s_prev + key_t)` per source position.
    pub energies: Matrix<T>,
    pub weights: Vec<T>,
    pub context: Vec<T>,
}

impl<T: Scalar> AttentionParams<T> {
    pub fn zeros(attn: usize, hidden: usize) -> Self {
        AttentionParams {
            w_state: Matrix::zeros(attn, hidden),
            w_annot: Matrix::zeros(attn, hidden),
            v: Matrix::zeros(attn, 1),
        }
    }

    pub fn attn_size(&self) -> usize {
        self.v.rows()
    }

    pub(crate) fn tensors(&self) -> [&Matrix<T>; 3] {
        [&self.w_state, &self.w_annot, &self.v]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Matrix<T>; 3] {
        [&mut self.w_state, &mut self.w_annot, &mut self.v]
    }

    pub(crate) fn check_shapes(&self, hidden: usize) -> Result<()> {
        let a = self.attn_size();
        if a == 0 {
            return Err(Error::contract("attention dimension must be positive"));
        }
        if self.w_state.shape() != (a, hidden) || self.w_annot.shape() != (a, hidden) || self.v.cols() != 1 {
            return Err(Error::contract("attention parameter shapes are inconsistent"));
        }
        Ok(())
    }

    /// `W_annot h_t` for every annotation row (source_len × attn).
    pub(crate) fn project_annotations(&self, annotations: &Matrix<T>) -> Matrix<T> {
        let mut keys = Matrix::zeros(annotations.rows(), self.attn_size());
        for t in 0..annotations.rows() {
            self.w_annot.matvec_add(annotations.row(t), keys.row_mut(t));
        }
        keys
    }

    pub(crate) fn step(&self, s_prev: &[T], annotations: &Matrix<T>, keys: &Matrix<T>) -> AttentionStep<T> {
        let query = self.w_state.matvec(s_prev);
        let len = annotations.rows();
        let mut energies = Matrix::zeros(len, self.attn_size());
        let mut scores = Vec::with_capacity(len);
        for t in 0..len {
            let e = energies.row_mut(t);
            for ((ei, &q), &k) in e.iter_mut().zip(&query).zip(keys.row(t)) {
                *ei = (q + k).tanh_fn();
            }
            scores.push(dot(self.v.as_slice(), e));
        }
        let weights = softmax(&scores);
        let context = weighted_sum(&weights, annotations);
        AttentionStep {
            energies,
            weights,
            context,
        }
    }

    /// Backprop from `d_context`. The key gradient is accumulated into
    /// `d_keys` so the `W_annot` contribution can be folded in once per
    /// sequence by [`AttentionParams::backward_keys`].
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        step: &AttentionStep<T>,
        s_prev: &[T],
        annotations: &Matrix<T>,
        d_context: &[T],
        grads: &mut AttentionParams<T>,
        ds_prev: &mut [T],
        d_annotations: &mut Matrix<T>,
        d_keys: &mut Matrix<T>,
    ) {
        let len = annotations.rows();
        let d_weights: Vec<T> = (0..len).map(|t| dot(d_context, annotations.row(t))).collect();
        for t in 0..len {
            axpy(step.weights[t], d_context, d_annotations.row_mut(t));
        }
        let mean: T = crate::scalar::sum(step.weights.iter().zip(&d_weights).map(|(&a, &d)| a * d));

        let v = self.v.as_slice();
        let mut d_query = vec![T::zero(); self.attn_size()];
        for t in 0..len {
            let d_score = step.weights[t] * (d_weights[t] - mean);
            let e = step.energies.row(t);
            axpy(d_score, e, grads.v.as_mut_slice());
            let dk = d_keys.row_mut(t);
            for i in 0..e.len() {
                let du = d_score * v[i] * (T::one() - e[i] * e[i]);
                dk[i] += du;
                d_query[i] += du;
            }
        }
        grads.w_state.add_outer(&d_query, s_prev);
        self.w_state.matvec_t_add(&d_query, ds_prev);
    }

    pub(crate) fn backward_keys(
        &self,
        annotations: &Matrix<T>,
        d_keys: &Matrix<T>,
        grads: &mut AttentionParams<T>,
        d_annotations: &mut Matrix<T>,
    ) {
        for t in 0..annotations.rows() {
            grads.w_annot.add_outer(d_keys.row(t), annotations.row(t));
            self.w_annot.matvec_t_add(d_keys.row(t), d_annotations.row_mut(t));
        }
    }
}

fn weighted_sum<T: Scalar>(weights: &[T], annotations: &Matrix<T>) -> Vec<T> {
    let mut out = vec![T::zero(); annotations.cols()];
    for (t, &w) in weights.iter().enumerate() {
        axpy(w, annotations.row(t), &mut out);
    }
    out
}

/// Softmax-normalised alignment weights of `s_prev` over the annotation rows.
pub fn attention_weights<T: Scalar>(
    s_prev: &[T],
    annotations: &Matrix<T>,
    attn: &AttentionParams<T>,
) -> Result<Vec<T>> {
    if annotations.rows() == 0 {
        return Err(Error::contract("attention over an empty source"));
    }
    attn.check_shapes(annotations.cols())?;
    if s_prev.len() != annotations.cols() {
        return Err(Error::contract("decoder state and annotation widths differ"));
    }
    let keys = attn.project_annotations(annotations);
    Ok(attn.step(s_prev, annotations, &keys).weights)
}

/// `Σ_t weights[t] · annotations[t]`.
pub fn context_vector<T: Scalar>(weights: &[T], annotations: &Matrix<T>) -> Result<Vec<T>> {
    if weights.len() != annotations.rows() {
        return Err(Error::contract(format!(
            "{} weights for {} annotations",
            weights.len(),
            annotations.rows()
        )));
    }
    Ok(weighted_sum(weights, annotations))
}
