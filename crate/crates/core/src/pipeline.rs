//! File-level stages: prepare → train → translate / evaluate.
//!
//! Each stage reads only what the previous one wrote, so the stages compose
//! without manual edits. All randomness comes from the seed in the options.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    load_email_corpus, read_pairs, split_record_paragraphs, write_pairs, CorpusFormat, Direction, SentencePair,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_comparison, write_details, write_report, EvalOptions, EvaluationReport};
use crate::model::{ModelConfig, ModelParams, Translator};
use crate::training::{
    build_regime_vocabularies, prepare_regime, train_with_observer, LogEntry, Regime, TrainConfig, TrainObserver,
    TrainReport,
};

pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const SOURCE_VOCAB_FILE: &str = "source.vocab";
pub const TARGET_VOCAB_FILE: &str = "target.vocab";
pub const STATS_FILE: &str = "stats.json";
pub const METRICS_FILE: &str = "metrics.tsv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const REPORT_FILE: &str = "evaluation.tsv";
pub const DETAILS_FILE: &str = "evaluation_details.tsv";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub out_dir: PathBuf,
    pub regime: Regime,
    pub direction: Direction,
    pub max_length: usize,
}

/// Summary written next to a prepared dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareStats {
    pub emails: usize,
    pub pairs: usize,
    /// Pairs dropped because a side exceeded `max_length` tokens.
    pub over_length: usize,
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub regime: Regime,
    pub direction: Direction,
    pub max_length: usize,
}

pub fn cmd_prepare(options: &PrepareOptions) -> Result<PrepareStats> {
    let records = load_email_corpus(&options.corpus, options.format)?;
    let (src_vocab, tgt_vocab) = build_regime_vocabularies(&records, options.regime, options.direction);
    let mut pairs = prepare_regime(&records, options.regime, options.direction, &src_vocab, &tgt_vocab);
    let before = pairs.len();
    pairs.retain(|p| p.source.len() <= options.max_length && p.target.len() <= options.max_length);
    let over_length = before - pairs.len();
    if over_length > 0 {
        warn!("dropped {over_length} pairs longer than {} tokens", options.max_length);
    }

    let stats = PrepareStats {
        emails: records.len(),
        pairs: pairs.len(),
        over_length,
        source_vocab_size: src_vocab.len(),
        target_vocab_size: tgt_vocab.len(),
        regime: options.regime,
        direction: options.direction,
        max_length: options.max_length,
    };
    let dir = &options.out_dir;
    create_dir(dir)?;
    write_pairs(&dir.join(PAIRS_FILE), &pairs)?;
    src_vocab.write_file(&dir.join(SOURCE_VOCAB_FILE))?;
    tgt_vocab.write_file(&dir.join(TARGET_VOCAB_FILE))?;
    let stats_path = dir.join(STATS_FILE);
    let json = serde_json::to_string_pretty(&stats).expect("stats serialise");
    fs::write(&stats_path, json + "\n").map_err(|e| Error::io(&stats_path, e))?;
    info!(
        "{} emails -> {} pairs; vocabularies {} / {}",
        stats.emails, stats.pairs, stats.source_vocab_size, stats.target_vocab_size
    );
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub pairs: Vec<SentencePair>,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub stats: PrepareStats,
}

pub fn load_prepared(dir: &Path) -> Result<PreparedDataset> {
    let stats_path = dir.join(STATS_FILE);
    let stats_text = fs::read_to_string(&stats_path).map_err(|e| Error::io(&stats_path, e))?;
    let stats: PrepareStats =
        serde_json::from_str(&stats_text).map_err(|e| Error::Dataset(format!("{}: {e}", stats_path.display())))?;
    let pairs = read_pairs(&dir.join(PAIRS_FILE))?;
    let src_vocab = Vocabulary::read_file(&dir.join(SOURCE_VOCAB_FILE))?;
    let tgt_vocab = Vocabulary::read_file(&dir.join(TARGET_VOCAB_FILE))?;
    for (i, pair) in pairs.iter().enumerate() {
        pair.validate(src_vocab.len(), tgt_vocab.len())
            .map_err(|e| Error::Dataset(format!("pair {}: {e}", i + 1)))?;
    }
    Ok(PreparedDataset {
        pairs,
        src_vocab,
        tgt_vocab,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
    pub config: TrainConfig,
    /// Write `checkpoint-<iteration>.bin` every this many iterations; 0 disables.
    pub checkpoint_every: usize,
}

/// Appends metric rows as they are logged and writes periodic checkpoints.
struct RunRecorder<'a> {
    metrics: File,
    metrics_path: PathBuf,
    out_dir: &'a Path,
    checkpoint_every: usize,
    src_vocab: &'a Vocabulary,
    tgt_vocab: &'a Vocabulary,
}

impl TrainObserver<f64> for RunRecorder<'_> {
    fn on_log(&mut self, entry: &LogEntry) -> Result<()> {
        writeln!(
            self.metrics,
            "{}\t{}\t{}",
            entry.iteration, entry.mean_loss, entry.context_concentration
        )
        .and_then(|_| self.metrics.flush())
        .map_err(|e| Error::io(&self.metrics_path, e))
    }

    fn on_iteration(&mut self, iteration: usize, params: &ModelParams<f64>) -> Result<()> {
        if self.checkpoint_every > 0 && iteration % self.checkpoint_every == 0 {
            let path = self.out_dir.join(format!("checkpoint-{iteration}.bin"));
            Translator::new(params.clone(), self.src_vocab.clone(), self.tgt_vocab.clone())?.save(&path)?;
        }
        Ok(())
    }
}

/// Seeded initial parameters; uses a different ChaCha stream from the
/// training sampler.
pub fn initial_params(config: &ModelConfig, seed: u64) -> ModelParams<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    ModelParams::init(config, &mut rng)
}

pub fn cmd_train(options: &TrainOptions) -> Result<TrainReport<f64>> {
    let data = load_prepared(&options.dataset_dir)?;
    if data.pairs.is_empty() {
        return Err(Error::Dataset("prepared dataset has no pairs".into()));
    }
    let model_config = ModelConfig::new(data.src_vocab.len(), data.tgt_vocab.len(), options.config.hidden_size);
    let params = initial_params(&model_config, options.config.rng_seed);

    let dir = &options.out_dir;
    create_dir(dir)?;
    let metrics_path = dir.join(METRICS_FILE);
    let mut metrics = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&metrics_path)
        .map_err(|e| Error::io(&metrics_path, e))?;
    writeln!(metrics, "iteration\tmean_loss\tcontext_concentration").map_err(|e| Error::io(&metrics_path, e))?;

    let mut recorder = RunRecorder {
        metrics,
        metrics_path,
        out_dir: dir,
        checkpoint_every: options.checkpoint_every,
        src_vocab: &data.src_vocab,
        tgt_vocab: &data.tgt_vocab,
    };
    let report = train_with_observer(
        &data.pairs,
        params,
        &options.config,
        data.stats.regime,
        &mut recorder,
    )?;
    Translator::new(report.final_params.clone(), data.src_vocab, data.tgt_vocab)?.save(&dir.join(CHECKPOINT_FILE))?;
    Ok(report)
}

pub fn cmd_translate(checkpoint: &Path, input: &str, max_len: usize) -> Result<String> {
    let translator = Translator::<f64>::load(checkpoint)?;
    translator.translate_text(input, max_len)
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub checkpoint: PathBuf,
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub out_dir: PathBuf,
    pub eval: EvalOptions,
}

pub fn cmd_evaluate(options: &EvaluateOptions) -> Result<EvaluationReport> {
    let translator = Translator::<f64>::load(&options.checkpoint)?;
    let records = load_email_corpus(&options.corpus, options.format)?;
    let paragraphs = split_record_paragraphs(&records);
    let report = evaluate_comparison(&translator, &paragraphs, &options.eval)?;
    create_dir(&options.out_dir)?;
    write_report(&options.out_dir.join(REPORT_FILE), &report)?;
    write_details(&options.out_dir.join(DETAILS_FILE), &report)?;
    Ok(report)
}
