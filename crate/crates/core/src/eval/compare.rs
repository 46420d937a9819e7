//! Model-vs-baseline BLEU comparison over sampled aligned paragraphs.

use std::fmt;
use std::path::Path;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bleu::{corpus_bleu, sentence_bleu, BleuBreakdown, BleuConfig};
use crate::corpus::{tokenize, AlignedParagraph, Direction};
use crate::error::{Error, Result};
use crate::model::Translator;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    ModelVsHuman,
    BaselineVsHuman,
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::ModelVsHuman => "model_vs_human",
            System::BaselineVsHuman => "baseline_vs_human",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub direction: Direction,
    pub system: System,
    /// Pooled corpus BLEU in [0, 1].
    pub corpus_bleu: f64,
    pub breakdown: BleuBreakdown,
    /// Unpooled mean of per-paragraph sentence BLEU.
    pub mean_sentence_bleu: f64,
    pub sample_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceDetail {
    pub email_id: usize,
    pub paragraph_index: usize,
    pub source: String,
    pub reference: String,
    pub hypothesis: String,
    pub sentence_bleu: f64,
    pub baseline: String,
    pub baseline_bleu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<ComparisonRow>,
    pub details: Vec<SentenceDetail>,
}

impl EvaluationReport {
    pub fn row(&self, system: System) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.system == system)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub direction: Direction,
    pub sample_size: usize,
    pub rng_seed: u64,
    /// Decoding length cap.
    pub max_len: usize,
    pub bleu: BleuConfig,
}

impl EvalOptions {
    pub fn new(direction: Direction) -> Self {
        EvalOptions {
            direction,
            sample_size: 100,
            rng_seed: 0,
            max_len: 2000,
            bleu: BleuConfig::default(),
        }
    }
}

/// Samples paragraphs, translates their source column, and scores both the
/// model output and the stored baseline column against the human reference
/// (one reference per paragraph).
pub fn evaluate_comparison<T: Scalar>(
    translator: &Translator<T>,
    eval_set: &[AlignedParagraph],
    options: &EvalOptions,
) -> Result<EvaluationReport> {
    if eval_set.is_empty() {
        return Err(Error::contract("evaluation set is empty"));
    }
    let mut sample_size = options.sample_size;
    if sample_size > eval_set.len() {
        warn!(
            "sample size {sample_size} exceeds {} available paragraphs; using all",
            eval_set.len()
        );
        sample_size = eval_set.len();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.rng_seed);
    let picked = rand::seq::index::sample(&mut rng, eval_set.len(), sample_size).into_vec();

    let direction = options.direction;
    let scored: Vec<(Vec<String>, Vec<String>, Vec<String>, Vec<String>)> = picked
        .par_iter()
        .map(|&i| {
            let record = &eval_set[i].record;
            let source = tokenize(direction.source(record));
            let reference = tokenize(direction.target(record));
            let baseline = tokenize(direction.baseline(record));
            let hypothesis = translator.translate_tokens(&source, options.max_len)?;
            Ok((source, reference, hypothesis, baseline))
        })
        .collect::<Result<_>>()?;

    let mut model_pairs = Vec::with_capacity(scored.len());
    let mut baseline_pairs = Vec::with_capacity(scored.len());
    let mut details = Vec::with_capacity(scored.len());
    for (&i, (source, reference, hypothesis, baseline)) in picked.iter().zip(scored) {
        let refs = [reference.clone()];
        let model_score = sentence_bleu(&hypothesis, &refs, options.bleu)?.score;
        let baseline_score = sentence_bleu(&baseline, &refs, options.bleu)?.score;
        details.push(SentenceDetail {
            email_id: eval_set[i].email_id,
            paragraph_index: eval_set[i].paragraph_index,
            source: source.join(" "),
            reference: reference.join(" "),
            hypothesis: hypothesis.join(" "),
            sentence_bleu: model_score,
            baseline: baseline.join(" "),
            baseline_bleu: baseline_score,
        });
        model_pairs.push((hypothesis, vec![reference.clone()]));
        baseline_pairs.push((baseline, vec![reference]));
    }

    let n = details.len() as f64;
    let mut rows = Vec::with_capacity(2);
    for (system, pairs, mean) in [
        (
            System::ModelVsHuman,
            &model_pairs,
            details.iter().map(|d| d.sentence_bleu).sum::<f64>() / n,
        ),
        (
            System::BaselineVsHuman,
            &baseline_pairs,
            details.iter().map(|d| d.baseline_bleu).sum::<f64>() / n,
        ),
    ] {
        let breakdown = corpus_bleu(pairs, options.bleu)?;
        rows.push(ComparisonRow {
            direction,
            system,
            corpus_bleu: breakdown.score,
            breakdown,
            mean_sentence_bleu: mean,
            sample_size,
            seed: options.rng_seed,
        });
    }
    Ok(EvaluationReport { rows, details })
}

fn tsv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, std::io::Error::other(e))
}

/// Summary rows: direction, system, corpus_bleu, p1..pN, brevity_penalty,
/// sample_size, seed, mean_sentence_bleu.
pub fn write_report(path: &Path, report: &EvaluationReport) -> Result<()> {
    let mut w = tsv_writer(path)?;
    let max_n = report.rows.first().map_or(4, |r| r.breakdown.ngram_precisions.len());
    let mut header = vec!["direction".to_owned(), "system".into(), "corpus_bleu".into()];
    header.extend((1..=max_n).map(|n| format!("p{n}")));
    header.extend(["brevity_penalty", "sample_size", "seed", "mean_sentence_bleu"].map(String::from));
    w.write_record(&header).map_err(csv_err(path))?;
    for row in &report.rows {
        let mut rec = vec![row.direction.to_string(), row.system.to_string(), row.corpus_bleu.to_string()];
        rec.extend(row.breakdown.ngram_precisions.iter().map(f64::to_string));
        rec.push(row.breakdown.brevity_penalty.to_string());
        rec.push(row.sample_size.to_string());
        rec.push(row.seed.to_string());
        rec.push(row.mean_sentence_bleu.to_string());
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One line per sampled paragraph: input, truth, model prediction, baseline.
pub fn write_details(path: &Path, report: &EvaluationReport) -> Result<()> {
    let mut w = tsv_writer(path)?;
    w.write_record([
        "email_id",
        "paragraph_index",
        "source",
        "reference",
        "hypothesis",
        "sentence_bleu",
        "baseline",
        "baseline_sentence_bleu",
    ])
    .map_err(csv_err(path))?;
    for d in &report.details {
        w.write_record([
            d.email_id.to_string(),
            d.paragraph_index.to_string(),
            d.source.clone(),
            d.reference.clone(),
            d.hypothesis.clone(),
            d.sentence_bleu.to_string(),
            d.baseline.clone(),
            d.baseline_bleu.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
