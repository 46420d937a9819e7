//! Neural machine translation toolkit for small bilingual email corpora.
//!
//! The crate implements a GRU encoder with an additive-attention GRU decoder,
//! trained pair-by-pair with teacher-forced SGD, plus the corpus handling
//! (4-column email files, contextual paragraph splitting, vocabularies) and
//! the BLEU harness used to compare model output against a baseline column.
//!
//! All numerical code is generic over [`Scalar`] (implemented for `f32` and
//! `f64`). The aliases below pin the double-precision instantiation, which is
//! what training, gradient checking and the CLI use.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::{DType, Scalar};
pub use tensor::Matrix;

/// Double-precision model parameters.
pub type Params = model::ModelParams<f64>;
/// Double-precision gradients (same layout as [`Params`]).
pub type Grads = model::Gradients<f64>;
/// Double-precision translator bundle (parameters plus vocabularies).
pub type Translator = model::Translator<f64>;
/// Double-precision training report.
pub type Report = training::TrainReport<f64>;

/// Single-precision model parameters.
pub type ParamsF32 = model::ModelParams<f32>;
/// Single-precision translator bundle.
pub type TranslatorF32 = model::Translator<f32>;
