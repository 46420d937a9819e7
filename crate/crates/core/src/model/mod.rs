//! GRU encoder, additive attention and attention decoder.

mod attention;
mod checkpoint;
mod gradcheck;
mod gru;
mod params;
mod seq2seq;

pub use attention::{attention_weights, context_vector, AttentionParams};
pub use checkpoint::{Translator, FORMAT_VERSION, MAGIC};
pub use gradcheck::{
    central_difference, check_gradients, finite_difference_grad, finite_difference_grad_extended, relative_error, GradCheckReport, GradientMismatch,
};
pub use gru::{gru_cell_forward, GruCellParams};
pub use params::{Gradients, ModelConfig, ModelParams, ParamCoord};
pub use seq2seq::{
    backward, decoder_step, encoder_forward, forward, forward_teacher_forced, teacher_forced_loss, DecoderStepOutput,
    EncoderOutput, Feeding, ForwardCache, ForwardOutput,
};
pub(crate) use seq2seq::DecoderContext;
