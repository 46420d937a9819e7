use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};
use crate::tensor::Matrix;

/// Parameters of one GRU cell.
///
/// `w_*` act on the input (hidden × input), `u_*` on the previous hidden
/// state (hidden × hidden), `b_*` are hidden × 1 biases.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCellParams<T> {
    pub w_update: Matrix<T>,
    pub u_update: Matrix<T>,
    pub b_update: Matrix<T>,
    pub w_reset: Matrix<T>,
    pub u_reset: Matrix<T>,
    pub b_reset: Matrix<T>,
    pub w_cand: Matrix<T>,
    pub u_cand: Matrix<T>,
    pub b_cand: Matrix<T>,
}

pub(crate) const GRU_TENSOR_NAMES: [&str; 9] = [
    "w_update", "u_update", "b_update", "w_reset", "u_reset", "b_reset", "w_cand", "u_cand", "b_cand",
];

/// Activations of one GRU step, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct GruStep<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub update: Vec<T>,
    pub reset: Vec<T>,
    /// `reset ⊙ h_prev`.
    pub gated: Vec<T>,
    pub cand: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> GruCellParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruCellParams {
            w_update: Matrix::zeros(hidden, input),
            u_update: Matrix::zeros(hidden, hidden),
            b_update: Matrix::zeros(hidden, 1),
            w_reset: Matrix::zeros(hidden, input),
            u_reset: Matrix::zeros(hidden, hidden),
            b_reset: Matrix::zeros(hidden, 1),
            w_cand: Matrix::zeros(hidden, input),
            u_cand: Matrix::zeros(hidden, hidden),
            b_cand: Matrix::zeros(hidden, 1),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_update.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.u_update.rows()
    }

    pub(crate) fn tensors(&self) -> [&Matrix<T>; 9] {
        [
            &self.w_update,
            &self.u_update,
            &self.b_update,
            &self.w_reset,
            &self.u_reset,
            &self.b_reset,
            &self.w_cand,
            &self.u_cand,
            &self.b_cand,
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Matrix<T>; 9] {
        [
            &mut self.w_update,
            &mut self.u_update,
            &mut self.b_update,
            &mut self.w_reset,
            &mut self.u_reset,
            &mut self.b_reset,
            &mut self.w_cand,
            &mut self.u_cand,
            &mut self.b_cand,
        ]
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let (h, i) = (self.hidden_size(), self.input_size());
        let expected = [(h, i), (h, h), (h, 1), (h, i), (h, h), (h, 1), (h, i), (h, h), (h, 1)];
        for ((name, m), shape) in GRU_TENSOR_NAMES.iter().zip(self.tensors()).zip(expected) {
            if m.shape() != shape {
                return Err(Error::contract(format!(
                    "GRU {name} has shape {:?}, expected {shape:?}",
                    m.shape()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn step(&self, x: &[T], h_prev: &[T]) -> GruStep<T> {
        let mut update = self.b_update.as_slice().to_vec();
        self.w_update.matvec_add(x, &mut update);
        self.u_update.matvec_add(h_prev, &mut update);
        update.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut reset = self.b_reset.as_slice().to_vec();
        self.w_reset.matvec_add(x, &mut reset);
        self.u_reset.matvec_add(h_prev, &mut reset);
        reset.iter_mut().for_each(|v| *v = sigmoid(*v));

        let gated: Vec<T> = reset.iter().zip(h_prev).map(|(&r, &h)| r * h).collect();
        let mut cand = self.b_cand.as_slice().to_vec();
        self.w_cand.matvec_add(x, &mut cand);
        self.u_cand.matvec_add(&gated, &mut cand);
        cand.iter_mut().for_each(|v| *v = v.tanh_fn());

        let h = update
            .iter()
            .zip(&cand)
            .zip(h_prev)
            .map(|((&z, &n), &hp)| (T::one() - z) * hp + z * n)
            .collect();

        GruStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            update,
            reset,
            gated,
            cand,
            h,
        }
    }

    /// Accumulates parameter gradients into `grads` and input/state gradients
    /// into `dx` and `dh_prev`, given `dh` = ∂loss/∂h for this step.
    pub(crate) fn backward(
        &self,
        step: &GruStep<T>,
        dh: &[T],
        grads: &mut GruCellParams<T>,
        dx: &mut [T],
        dh_prev: &mut [T],
    ) {
        let one = T::one();
        let hidden = dh.len();
        let mut a_update = vec![T::zero(); hidden];
        let mut a_cand = vec![T::zero(); hidden];
        for i in 0..hidden {
            let (z, n) = (step.update[i], step.cand[i]);
            dh_prev[i] += dh[i] * (one - z);
            a_update[i] = dh[i] * (n - step.h_prev[i]) * z * (one - z);
            a_cand[i] = dh[i] * z * (one - n * n);
        }

        // candidate branch
        grads.w_cand.add_outer(&a_cand, &step.x);
        grads.u_cand.add_outer(&a_cand, &step.gated);
        add_into(grads.b_cand.as_mut_slice(), &a_cand);
        self.w_cand.matvec_t_add(&a_cand, dx);
        let mut d_gated = vec![T::zero(); hidden];
        self.u_cand.matvec_t_add(&a_cand, &mut d_gated);

        let mut a_reset = vec![T::zero(); hidden];
        for i in 0..hidden {
            let r = step.reset[i];
            dh_prev[i] += d_gated[i] * r;
            a_reset[i] = d_gated[i] * step.h_prev[i] * r * (one - r);
        }

        gate_backward(&a_update, step, &self.w_update, &self.u_update,
            (&mut grads.w_update, &mut grads.u_update, &mut grads.b_update), dx, dh_prev);
        gate_backward(&a_reset, step, &self.w_reset, &self.u_reset,
            (&mut grads.w_reset, &mut grads.u_reset, &mut grads.b_reset), dx, dh_prev);
    }
}

/// Backprop through one sigmoid gate given its pre-activation gradient `a`.
fn gate_backward<T: Scalar>(
    a: &[T],
    step: &GruStep<T>,
    w: &Matrix<T>,
    u: &Matrix<T>,
    (gw, gu, gb): (&mut Matrix<T>, &mut Matrix<T>, &mut Matrix<T>),
    dx: &mut [T],
    dh_prev: &mut [T],
) {
    gw.add_outer(a, &step.x);
    gu.add_outer(a, &step.h_prev);
    add_into(gb.as_mut_slice(), a);
    w.matvec_t_add(a, dx);
    u.matvec_t_add(a, dh_prev);
}

fn add_into<T: Scalar>(acc: &mut [T], v: &[T]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// One GRU step: `h = (1 − z) ⊙ h_prev + z ⊙ tanh(W_c x + U_c (r ⊙ h_prev) + b_c)`
/// with update gate `z` and reset gate `r`.
pub fn gru_cell_forward<T: Scalar>(x: &[T], h_prev: &[T], params: &GruCellParams<T>) -> Result<Vec<T>> {
    params.check_shapes()?;
    if x.len() != params.input_size() || h_prev.len() != params.hidden_size() {
        return Err(Error::contract(format!(
            "GRU expects input {} and hidden {}, got {} and {}",
            params.input_size(),
            params.hidden_size(),
            x.len(),
            h_prev.len()
        )));
    }
    Ok(params.step(x, h_prev).h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cell(input: usize, hidden: usize, bound: f64, seed: u64) -> GruCellParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = GruCellParams::zeros(input, hidden);
        for m in p.tensors_mut() {
            *m = Matrix::random_uniform(m.rows(), m.cols(), bound, &mut rng);
        }
        p
    }

    #[test]
    fn zero_params_fixed_point() {
        let p = GruCellParams::<f64>::zeros(3, 2);
        let step = p.step(&[0.3, -1.0, 2.0], &[0.0, 0.0]);
        assert_eq!(step.update, vec![0.5, 0.5]);
        assert_eq!(step.h, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_update_gate_passes_candidate() {
        let mut p = GruCellParams::<f64>::zeros(1, 1);
        p.b_update.set(0, 0, 10.0);
        p.w_cand.set(0, 0, 1.0);
        let h = gru_cell_forward(&[0.5], &[0.0], &p).unwrap();
        // z = sigmoid(10), h = z * tanh(0.5)
        let expected = 0.5f64.tanh() / (1.0 + (-10.0f64).exp());
        assert!((h[0] - expected).abs() < 1e-15);
        assert!((h[0] - 0.4621).abs() < 1e-4);
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let p = GruCellParams::<f64>::zeros(3, 2);
        assert!(gru_cell_forward(&[0.0; 2], &[0.0; 2], &p).is_err());
        assert!(gru_cell_forward(&[0.0; 3], &[0.0; 3], &p).is_err());
    }

    #[test]
    fn step_gradients_match_finite_differences() {
        let p = random_cell(3, 4, 0.8, 7);
        let x = [0.2, -0.7, 0.4];
        let h0 = [0.1, -0.3, 0.5, 0.0];
        let weights = [0.3, -1.2, 0.7, 0.5];
        let objective = |p: &GruCellParams<f64>, x: &[f64], h0: &[f64]| -> f64 {
            p.step(x, h0).h.iter().zip(&weights).map(|(a, b)| a * b).sum()
        };
        let step = p.step(&x, &h0);
        let mut grads = GruCellParams::zeros(3, 4);
        let mut dx = vec![0.0; 3];
        let mut dh = vec![0.0; 4];
        p.backward(&step, &weights, &mut grads, &mut dx, &mut dh);

        let eps = 1e-6;
        for (k, _) in GRU_TENSOR_NAMES.iter().enumerate() {
            for idx in 0..p.tensors()[k].len() {
                let mut plus = p.clone();
                plus.tensors_mut()[k].as_mut_slice()[idx] += eps;
                let mut minus = p.clone();
                minus.tensors_mut()[k].as_mut_slice()[idx] -= eps;
                let fd = (objective(&plus, &x, &h0) - objective(&minus, &x, &h0)) / (2.0 * eps);
                let an = grads.tensors()[k].as_slice()[idx];
                assert!((fd - an).abs() < 1e-8, "{} [{idx}]: {an} vs {fd}", GRU_TENSOR_NAMES[k]);
            }
        }
        for i in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (objective(&p, &xp, &h0) - objective(&p, &xm, &h0)) / (2.0 * eps);
            assert!((fd - dx[i]).abs() < 1e-8);
        }
        for i in 0..4 {
            let (mut hp, mut hm) = (h0, h0);
            hp[i] += eps;
            hm[i] -= eps;
            let fd = (objective(&p, &x, &hp) - objective(&p, &x, &hm)) / (2.0 * eps);
            assert!((fd - dh[i]).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn output_stays_inside_unit_box(
            seed in any::<u64>(),
            x in prop::collection::vec(-5.0f64..5.0, 3),
            h in prop::collection::vec(-0.999f64..0.999, 4),
        ) {
            let p = random_cell(3, 4, 1.0, seed);
            let out = gru_cell_forward(&x, &h, &p).unwrap();
            prop_assert!(out.iter().all(|v| v.abs() < 1.0));
        }
    }
}
