//! Teacher-forced SGD training in the email-level and paragraph-level regimes.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_vocabulary, encode_pair, split_contextual_paragraphs, tokenize, Direction, EmailRecord, SentencePair,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::model::{backward, forward, Feeding, ModelParams};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// How emails are cut into training pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// One pair per whole email.
    EmailLevel,
    /// One pair per aligned contextual paragraph.
    ParagraphLevel,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::EmailLevel => "email",
            Regime::ParagraphLevel => "paragraph",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "email" | "email_level" => Ok(Regime::EmailLevel),
            "paragraph" | "paragraph_level" => Ok(Regime::ParagraphLevel),
            other => Err(Error::contract(format!("unknown regime `{other}` (expected email or paragraph)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub learning_rate: f64,
    /// Probability that a pair is decoded with ground-truth inputs.
    pub teacher_forcing_prob: f64,
    pub iterations: usize,
    /// Longest source or target (in tokens, EOS included) accepted.
    pub max_length: usize,
    pub log_interval: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_size: 256,
            learning_rate: 0.01,
            teacher_forcing_prob: 0.5,
            iterations: 80_000,
            max_length: 2000,
            log_interval: 100,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract("learning_rate must be positive"));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing_prob) {
            return Err(Error::contract("teacher_forcing_prob must lie in [0, 1]"));
        }
        if self.iterations == 0 || self.log_interval == 0 || self.hidden_size == 0 || self.max_length == 0 {
            return Err(Error::contract(
                "iterations, log_interval, hidden_size and max_length must be at least 1",
            ));
        }
        Ok(())
    }
}

/// One logged interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub mean_loss: f64,
    pub context_concentration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    /// `(iteration, mean loss over the preceding interval)`.
    pub loss_log: Vec<(usize, f64)>,
    /// `(iteration, mean context concentration over the preceding interval)`.
    pub context_log: Vec<(usize, f64)>,
    pub final_params: ModelParams<T>,
    pub regime: Regime,
    /// Steps skipped because a pair exceeded `max_length`.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<T> {
    /// Loss before the update.
    pub loss: T,
    pub context_concentration: T,
    pub teacher_forced: bool,
}

/// Mean over decoder steps of the largest attention weight.
pub fn context_concentration<T: Scalar>(alphas: &Matrix<T>) -> Result<T> {
    if alphas.rows() == 0 || alphas.cols() == 0 {
        return Err(Error::contract("context concentration of empty attention"));
    }
    let total: T = crate::scalar::sum((0..alphas.rows()).map(|i| alphas.row(i).iter().copied().fold(T::zero(), T::max)));
    Ok(total / T::lit(alphas.rows() as f64))
}

/// One SGD step on `pair`. Returns `None` (and leaves `params` untouched) when
/// the pair is longer than `max_length`. A non-finite loss is returned without
/// applying the update.
pub fn train_step<T: Scalar, R: Rng + ?Sized>(
    pair: &SentencePair,
    params: &mut ModelParams<T>,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Option<StepOutcome<T>>> {
    if pair.source.len() > config.max_length || pair.target.len() > config.max_length {
        warn!(
            "skipping pair of lengths {}/{} (max_length {})",
            pair.source.len(),
            pair.target.len(),
            config.max_length
        );
        return Ok(None);
    }
    let teacher_forced = rng.gen_bool(config.teacher_forcing_prob);
    let feeding = if teacher_forced {
        Feeding::TeacherForced
    } else {
        Feeding::Greedy
    };
    let fwd = forward(pair, params, feeding)?;
    let outcome = StepOutcome {
        loss: fwd.loss,
        context_concentration: context_concentration(&fwd.alphas)?,
        teacher_forced,
    };
    if fwd.loss.is_finite() {
        let grads = backward(&fwd.cache, params);
        params.sgd_update(&grads, T::lit(config.learning_rate));
    }
    Ok(Some(outcome))
}

/// Hooks called from inside [`train_with_observer`].
pub trait TrainObserver<T> {
    fn on_log(&mut self, _entry: &LogEntry) -> Result<()> {
        Ok(())
    }

    /// Called after every iteration with the updated parameters.
    fn on_iteration(&mut self, _iteration: usize, _params: &ModelParams<T>) -> Result<()> {
        Ok(())
    }
}

impl<T> TrainObserver<T> for () {}

pub fn train<T: Scalar>(
    dataset: &[SentencePair],
    params: ModelParams<T>,
    config: &TrainConfig,
    regime: Regime,
) -> Result<TrainReport<T>> {
    train_with_observer(dataset, params, config, regime, &mut ())
}

/// Runs `config.iterations` steps on pairs drawn uniformly with replacement.
pub fn train_with_observer<T: Scalar>(
    dataset: &[SentencePair],
    mut params: ModelParams<T>,
    config: &TrainConfig,
    regime: Regime,
    observer: &mut dyn TrainObserver<T>,
) -> Result<TrainReport<T>> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::contract("cannot train on an empty dataset"));
    }
    let cfg = params.config();
    for pair in dataset {
        pair.validate(cfg.src_vocab, cfg.tgt_vocab)?;
    }
    if !dataset
        .iter()
        .any(|p| p.source.len() <= config.max_length && p.target.len() <= config.max_length)
    {
        return Err(Error::contract("every pair exceeds max_length"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut report = TrainReport {
        loss_log: Vec::new(),
        context_log: Vec::new(),
        final_params: ModelParams::zeros(&cfg),
        regime,
        skipped: 0,
    };
    let (mut loss_sum, mut conc_sum, mut count) = (0.0f64, 0.0f64, 0usize);

    for iteration in 1..=config.iterations {
        let pair = &dataset[rng.gen_range(0..dataset.len())];
        match train_step(pair, &mut params, config, &mut rng)? {
            Some(step) => {
                if !step.loss.is_finite() {
                    return Err(Error::NonFinite { iteration });
                }
                loss_sum += step.loss.as_f64();
                conc_sum += step.context_concentration.as_f64();
                count += 1;
            }
            None => report.skipped += 1,
        }
        observer.on_iteration(iteration, &params)?;

        if iteration % config.log_interval == 0 && count > 0 {
            let entry = LogEntry {
                iteration,
                mean_loss: loss_sum / count as f64,
                context_concentration: conc_sum / count as f64,
            };
            debug!("iter {iteration}: loss {:.5} context {:.4}", entry.mean_loss, entry.context_concentration);
            report.loss_log.push((iteration, entry.mean_loss));
            report.context_log.push((iteration, entry.context_concentration));
            observer.on_log(&entry)?;
            (loss_sum, conc_sum, count) = (0.0, 0.0, 0);
        }
    }
    report.final_params = params;
    Ok(report)
}

/// Tokenized (source, target) units for a regime, before vocabulary lookup.
/// Paragraph-level emails whose two sides split into different paragraph
/// counts are excluded with a warning.
pub fn regime_token_pairs(
    records: &[EmailRecord],
    regime: Regime,
    direction: Direction,
) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out = Vec::new();
    for (id, record) in records.iter().enumerate() {
        let (src, tgt) = (direction.source(record), direction.target(record));
        match regime {
            Regime::EmailLevel => out.push((tokenize(src), tokenize(tgt))),
            Regime::ParagraphLevel => {
                let sp = split_contextual_paragraphs(src);
                let tp = split_contextual_paragraphs(tgt);
                if sp.len() != tp.len() {
                    warn!(
                        "email {id}: {} source vs {} target paragraphs; excluded",
                        sp.len(),
                        tp.len()
                    );
                    continue;
                }
                out.extend(sp.iter().zip(&tp).map(|(s, t)| (tokenize(s), tokenize(t))));
            }
        }
    }
    out.retain(|(s, t)| !s.is_empty() && !t.is_empty());
    out
}

/// Source and target vocabularies over the text a regime would train on.
pub fn build_regime_vocabularies(
    records: &[EmailRecord],
    regime: Regime,
    direction: Direction,
) -> (Vocabulary, Vocabulary) {
    let pairs = regime_token_pairs(records, regime, direction);
    let (src, tgt): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    (build_vocabulary(&src), build_vocabulary(&tgt))
}

/// Encoded training pairs for `regime`.
pub fn prepare_regime(
    records: &[EmailRecord],
    regime: Regime,
    direction: Direction,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Vec<SentencePair> {
    regime_token_pairs(records, regime, direction)
        .iter()
        .map(|(s, t)| encode_pair(src_vocab, tgt_vocab, s, t).expect("non-empty after filtering"))
        .collect()
}
