//! Greedy decoding, BLEU, and the model-vs-baseline comparison harness.

mod bleu;
mod compare;
mod decode;

pub use bleu::{
    corpus_bleu, modified_ngram_precision, sentence_bleu, sentence_stats, BleuBreakdown, BleuConfig, BleuStats,
};
pub use compare::{
    evaluate_comparison, write_details, write_report, ComparisonRow, EvalOptions, EvaluationReport, SentenceDetail,
    System,
};
pub use decode::greedy_decode;
